#pragma once

#include <string>

#include "copercept/core/error.hpp"
#include "copercept/core/grid.hpp"
#include "copercept/core/weights.hpp"

namespace copercept {

/// Sums the L vertical bins of every column, then applies `proj` per cell.
template <typename Scalar>
BevGrid<Scalar> collapse_to_bev(const VoxelGrid<Scalar>& v, const Linear& proj) {
  const GridShape& s = v.shape();
  if (proj.in_features() != s.channels) {
    throw ShapeError("collapse: projection expects " + std::to_string(proj.in_features()) + " channels, voxel has " +
                     std::to_string(s.channels));
  }
  CellMatrix<Scalar> sums(s.columns(), s.channels);
  for (Eigen::Index col = 0; col < s.columns(); ++col) {
    const Eigen::Index first = col * s.l_bins;
    sums.row(col) = v.cells().middleRows(first, s.l_bins).colwise().sum();
  }
  CellMatrix<Scalar> out = sums * proj.weight.transpose().template cast<Scalar>();
  out.rowwise() += proj.bias.template cast<Scalar>();
  return BevGrid<Scalar>(s.with_channels(proj.out_features()), std::move(out), v.frame());
}

}  // namespace copercept
