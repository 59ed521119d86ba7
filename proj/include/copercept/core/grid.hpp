#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "copercept/core/error.hpp"

namespace copercept {

using AgentId = std::uint32_t;

/// Extent and resolution of a voxel / BEV grid.
///
/// Cell (h, w) of an agent grid is centred at
///   x = (w + 0.5 - W/2) * cell_size_m,  y = (h + 0.5 - H/2) * cell_size_m
/// in that agent's frame, and vertical bin l at z = (l + 0.5) * z_size_m.
struct GridShape {
  int h_cells = 1;
  int w_cells = 1;
  int l_bins = 1;
  int channels = 1;
  double cell_size_m = 1.0;
  double z_size_m = 1.0;

  void validate() const {
    if (h_cells < 1 || w_cells < 1 || l_bins < 1 || channels < 1) {
      throw ShapeError("grid counts must be >= 1, got " + describe());
    }
    if (!(cell_size_m > 0.0) || !(z_size_m > 0.0)) {
      throw ShapeError("grid cell sizes must be positive, got " + describe());
    }
  }

  Eigen::Index columns() const { return Eigen::Index(h_cells) * w_cells; }
  Eigen::Index voxels() const { return columns() * l_bins; }

  GridShape with_channels(int c) const {
    GridShape s = *this;
    s.channels = c;
    return s;
  }

  bool same_extent(const GridShape& o) const {
    return h_cells == o.h_cells && w_cells == o.w_cells && l_bins == o.l_bins;
  }

  bool operator==(const GridShape&) const = default;

  std::string describe() const {
    return std::to_string(h_cells) + "x" + std::to_string(w_cells) + "x" +
           std::to_string(l_bins) + "x" + std::to_string(channels);
  }
};

/// Row-major dense matrix, one grid cell per row.
template <typename Scalar>
using CellMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// H x W x L x C feature volume. Storage is a (H*W*L) x C row-major matrix,
/// so the flat element order is (h, w, l, c).
template <typename Scalar>
class VoxelGrid {
 public:
  using Matrix = CellMatrix<Scalar>;

  VoxelGrid() = default;

  explicit VoxelGrid(const GridShape& shape, AgentId frame = 0)
      : shape_(shape), cells_(Matrix::Zero(shape.voxels(), shape.channels)), frame_(frame) {
    shape.validate();
  }

  VoxelGrid(const GridShape& shape, Matrix cells, AgentId frame)
      : shape_(shape), cells_(std::move(cells)), frame_(frame) {
    shape.validate();
    if (cells_.rows() != shape.voxels() || cells_.cols() != shape.channels) {
      throw ShapeError("voxel data " + std::to_string(cells_.rows()) + "x" +
                       std::to_string(cells_.cols()) + " does not match shape " +
                       shape.describe());
    }
  }

  const GridShape& shape() const { return shape_; }
  AgentId frame() const { return frame_; }
  void set_frame(AgentId f) { frame_ = f; }

  Eigen::Index index(int h, int w, int l) const {
    return (Eigen::Index(h) * shape_.w_cells + w) * shape_.l_bins + l;
  }

  auto cell(int h, int w, int l) { return cells_.row(index(h, w, l)); }
  auto cell(int h, int w, int l) const { return cells_.row(index(h, w, l)); }

  Scalar& operator()(int h, int w, int l, int c) { return cells_(index(h, w, l), c); }
  Scalar operator()(int h, int w, int l, int c) const { return cells_(index(h, w, l), c); }

  Matrix& cells() { return cells_; }
  const Matrix& cells() const { return cells_; }

  bool all_finite() const { return cells_.allFinite(); }

  template <typename Other>
  VoxelGrid<Other> cast() const {
    return VoxelGrid<Other>(shape_, cells_.template cast<Other>(), frame_);
  }

 private:
  GridShape shape_{};
  Matrix cells_;
  AgentId frame_ = 0;
};

/// H x W x C bird's-eye-view plane; shape().l_bins is carried but ignored.
template <typename Scalar>
class BevGrid {
 public:
  using Matrix = CellMatrix<Scalar>;

  BevGrid() = default;

  explicit BevGrid(const GridShape& shape, AgentId frame = 0)
      : shape_(shape), cells_(Matrix::Zero(shape.columns(), shape.channels)), frame_(frame) {
    shape.validate();
  }

  BevGrid(const GridShape& shape, Matrix cells, AgentId frame)
      : shape_(shape), cells_(std::move(cells)), frame_(frame) {
    shape.validate();
    if (cells_.rows() != shape.columns() || cells_.cols() != shape.channels) {
      throw ShapeError("bev data " + std::to_string(cells_.rows()) + "x" +
                       std::to_string(cells_.cols()) + " does not match shape " +
                       shape.describe());
    }
  }

  const GridShape& shape() const { return shape_; }
  int height() const { return shape_.h_cells; }
  int width() const { return shape_.w_cells; }
  int channels() const { return shape_.channels; }
  AgentId frame() const { return frame_; }
  void set_frame(AgentId f) { frame_ = f; }

  Eigen::Index index(int h, int w) const { return Eigen::Index(h) * shape_.w_cells + w; }

  auto cell(int h, int w) { return cells_.row(index(h, w)); }
  auto cell(int h, int w) const { return cells_.row(index(h, w)); }

  Scalar& operator()(int h, int w, int c) { return cells_(index(h, w), c); }
  Scalar operator()(int h, int w, int c) const { return cells_(index(h, w), c); }

  Matrix& cells() { return cells_; }
  const Matrix& cells() const { return cells_; }

  bool all_finite() const { return cells_.allFinite(); }

  template <typename Other>
  BevGrid<Other> cast() const {
    return BevGrid<Other>(shape_, cells_.template cast<Other>(), frame_);
  }

 private:
  GridShape shape_{};
  Matrix cells_;
  AgentId frame_ = 0;
};

using VoxelFeature = VoxelGrid<float>;
using BevFeature = BevGrid<float>;

/// Bitwise comparison of two dense Eigen objects (distinguishes -0.0 and NaN payloads).
template <typename A, typename B>
bool bit_equal(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  const auto ea = a.derived().eval();
  const auto eb = b.derived().eval();
  return std::memcmp(ea.data(), eb.data(), sizeof(typename A::Scalar) * ea.size()) == 0;
}

template <typename Scalar>
bool bit_equal(const VoxelGrid<Scalar>& a, const VoxelGrid<Scalar>& b) {
  return a.shape() == b.shape() && bit_equal(a.cells(), b.cells());
}

template <typename Scalar>
bool bit_equal(const BevGrid<Scalar>& a, const BevGrid<Scalar>& b) {
  return a.shape().h_cells == b.shape().h_cells && a.shape().w_cells == b.shape().w_cells &&
         bit_equal(a.cells(), b.cells());
}

/// Centre of BEV cell (h, w) in the owning agent's frame, metres.
inline Eigen::Vector2d cell_center(const GridShape& s, double h, double w) {
  return {(w + 0.5 - 0.5 * s.w_cells) * s.cell_size_m, (h + 0.5 - 0.5 * s.h_cells) * s.cell_size_m};
}

/// Inverse of cell_center: continuous (h, w) index for a frame point.
inline Eigen::Vector2d cell_coords(const GridShape& s, const Eigen::Vector2d& p) {
  return {p.y() / s.cell_size_m + 0.5 * s.h_cells - 0.5, p.x() / s.cell_size_m + 0.5 * s.w_cells - 0.5};
}

}  // namespace copercept
