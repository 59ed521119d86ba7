#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "copercept/core/error.hpp"
#include "copercept/core/grid.hpp"

namespace copercept {

/// Row-wise softmax with max subtraction; every row of the result sums to 1.
template <typename Derived>
CellMatrix<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  CellMatrix<Scalar> out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const Scalar peak = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - peak).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

/// softmax(Q K^T / sqrt(C)) for M queries against N keys of width C.
template <typename DQ, typename DK>
CellMatrix<typename DQ::Scalar> attention_weights(const Eigen::MatrixBase<DQ>& queries,
                                                  const Eigen::MatrixBase<DK>& keys) {
  using Scalar = typename DQ::Scalar;
  if (queries.cols() != keys.cols()) {
    throw ShapeError("attention: query width " + std::to_string(queries.cols()) +
                     " != key width " + std::to_string(keys.cols()));
  }
  if (queries.cols() < 1) throw ShapeError("attention: feature width must be >= 1");
  if (keys.rows() < 1) throw ShapeError("attention: at least one key is required");
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(queries.cols()));
  CellMatrix<Scalar> logits = (queries * keys.transpose()) * scale;
  return softmax_rows(logits);
}

/// Scaled dot-product attention. Output row i = softmax(q_i K^T / sqrt(C)) V.
template <typename DQ, typename DK, typename DV>
CellMatrix<typename DQ::Scalar> attention(const Eigen::MatrixBase<DQ>& queries,
                                          const Eigen::MatrixBase<DK>& keys,
                                          const Eigen::MatrixBase<DV>& values) {
  if (keys.rows() != values.rows()) {
    throw ShapeError("attention: " + std::to_string(keys.rows()) + " keys but " +
                     std::to_string(values.rows()) + " values");
  }
  if (queries.rows() == 0) return CellMatrix<typename DQ::Scalar>(0, values.cols());
  return attention_weights(queries, keys) * values;
}

}  // namespace copercept
