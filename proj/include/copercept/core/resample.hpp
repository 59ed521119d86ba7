#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "copercept/core/error.hpp"
#include "copercept/core/grid.hpp"

namespace copercept {

namespace detail {

// Row index layout of a grid with spatial dims {d0, d1, d2}: (i0 * d1 + i1) * d2 + i2.
using Dims3 = std::array<int, 3>;

inline Eigen::Index flat(const Dims3& d, int i0, int i1, int i2) {
  return (Eigen::Index(i0) * d[1] + i1) * d[2] + i2;
}

/// Halves one axis (ceil) with pairwise means; a constant grid stays bit-identical.
template <typename Scalar>
CellMatrix<Scalar> halve_axis(const CellMatrix<Scalar>& in, Dims3& dims, int axis) {
  Dims3 out_dims = dims;
  out_dims[axis] = (dims[axis] + 1) / 2;
  CellMatrix<Scalar> out(Eigen::Index(out_dims[0]) * out_dims[1] * out_dims[2], in.cols());
  for (int a = 0; a < out_dims[0]; ++a) {
    for (int b = 0; b < out_dims[1]; ++b) {
      for (int c = 0; c < out_dims[2]; ++c) {
        std::array<int, 3> lo{a, b, c};
        lo[axis] *= 2;
        std::array<int, 3> hi = lo;
        hi[axis] += 1;
        const auto dst = flat(out_dims, a, b, c);
        if (hi[axis] < dims[axis]) {
          out.row(dst) = (in.row(flat(dims, lo[0], lo[1], lo[2])) + in.row(flat(dims, hi[0], hi[1], hi[2]))) /
                         Scalar(2);
        } else {
          out.row(dst) = in.row(flat(dims, lo[0], lo[1], lo[2]));
        }
      }
    }
  }
  dims = out_dims;
  return out;
}

/// Linear resize of one axis with half-pixel centres and edge clamping.
template <typename Scalar>
CellMatrix<Scalar> resize_axis(const CellMatrix<Scalar>& in, Dims3& dims, int axis, int new_len) {
  Dims3 out_dims = dims;
  out_dims[axis] = new_len;
  CellMatrix<Scalar> out(Eigen::Index(out_dims[0]) * out_dims[1] * out_dims[2], in.cols());
  const int len = dims[axis];
  const double ratio = double(len) / double(new_len);
  std::vector<int> lo(new_len), hi(new_len);
  std::vector<Scalar> frac(new_len);
  for (int i = 0; i < new_len; ++i) {
    const double src = std::clamp((i + 0.5) * ratio - 0.5, 0.0, double(len - 1));
    lo[i] = static_cast<int>(std::floor(src));
    hi[i] = std::min(lo[i] + 1, len - 1);
    frac[i] = static_cast<Scalar>(src - lo[i]);
  }
  for (int a = 0; a < out_dims[0]; ++a) {
    for (int b = 0; b < out_dims[1]; ++b) {
      for (int c = 0; c < out_dims[2]; ++c) {
        std::array<int, 3> p0{a, b, c};
        const int i = p0[axis];
        std::array<int, 3> p1 = p0;
        p0[axis] = lo[i];
        p1[axis] = hi[i];
        const auto r0 = in.row(flat(dims, p0[0], p0[1], p0[2]));
        const auto r1 = in.row(flat(dims, p1[0], p1[1], p1[2]));
        out.row(flat(out_dims, a, b, c)) = r0 + frac[i] * (r1 - r0);
      }
    }
  }
  dims = out_dims;
  return out;
}

}  // namespace detail

/// 2x2 mean pooling; odd trailing rows/columns pool over the cells that exist.
template <typename Scalar>
BevGrid<Scalar> downsample2(const BevGrid<Scalar>& b) {
  detail::Dims3 dims{b.height(), b.width(), 1};
  auto m = detail::halve_axis(b.cells(), dims, 0);
  m = detail::halve_axis(m, dims, 1);
  GridShape s = b.shape();
  s.h_cells = dims[0];
  s.w_cells = dims[1];
  s.cell_size_m *= 2.0;
  return BevGrid<Scalar>(s, std::move(m), b.frame());
}

/// Bilinear resize (half-pixel centres, edge clamp) to h x w cells.
template <typename Scalar>
BevGrid<Scalar> resize_bilinear(const BevGrid<Scalar>& b, int h, int w) {
  if (h < 1 || w < 1) throw ShapeError("resize_bilinear: target dims must be >= 1");
  detail::Dims3 dims{b.height(), b.width(), 1};
  CellMatrix<Scalar> m = b.cells();
  if (h != dims[0]) m = detail::resize_axis(m, dims, 0, h);
  if (w != dims[1]) m = detail::resize_axis(m, dims, 1, w);
  GridShape s = b.shape();
  s.cell_size_m *= double(b.height()) / double(h);
  s.h_cells = h;
  s.w_cells = w;
  return BevGrid<Scalar>(s, std::move(m), b.frame());
}

/// Resampling factor num/den; resample_bev accepts 1/2, 1/4, 2 and 4.
struct ScaleFactor {
  int num = 1;
  int den = 1;
};

/// Down by 2 is 2x2 mean pooling (ceil dims), up is bilinear.
template <typename Scalar>
BevGrid<Scalar> resample_bev(const BevGrid<Scalar>& b, ScaleFactor f) {
  const bool down = f.num == 1 && (f.den == 2 || f.den == 4);
  const bool up = f.den == 1 && (f.num == 2 || f.num == 4);
  if (!down && !up) {
    throw ParameterError("resample_bev: factor " + std::to_string(f.num) + "/" + std::to_string(f.den) +
                         " not in {1/2, 1/4, 2, 4}");
  }
  if (up) return resize_bilinear(b, b.height() * f.num, b.width() * f.num);
  if (b.height() < f.den || b.width() < f.den) {
    throw ShapeError("resample_bev: downsampling " + b.shape().describe() + " by " + std::to_string(f.den) +
                     " leaves a dimension < 1");
  }
  BevGrid<Scalar> out = downsample2(b);
  if (f.den == 4) out = downsample2(out);
  return out;
}

/// Per-axis mean pooling of a voxel grid by factors that divide the grid exactly.
template <typename Scalar>
VoxelGrid<Scalar> mean_pool_voxel(const VoxelGrid<Scalar>& v, const std::array<int, 3>& factors) {
  const GridShape& in = v.shape();
  detail::Dims3 dims{in.h_cells, in.w_cells, in.l_bins};
  for (int axis = 0; axis < 3; ++axis) {
    const int f = factors[axis];
    if (f != 1 && f != 2 && f != 4) throw ParameterError("pool factors must be 1, 2 or 4");
    if (dims[axis] % f != 0) {
      throw ShapeError("voxel grid " + in.describe() + " is not divisible by pool factor " + std::to_string(f) +
                       " on axis " + std::to_string(axis));
    }
  }
  CellMatrix<Scalar> m = v.cells();
  for (int axis = 0; axis < 3; ++axis) {
    for (int f = factors[axis]; f > 1; f /= 2) m = detail::halve_axis(m, dims, axis);
  }
  GridShape s = in;
  s.h_cells = dims[0];
  s.w_cells = dims[1];
  s.l_bins = dims[2];
  s.cell_size_m *= factors[0];
  s.z_size_m *= factors[2];
  return VoxelGrid<Scalar>(s, std::move(m), v.frame());
}

/// Trilinear (separable, half-pixel, edge clamp) resize to target's H x W x L.
template <typename Scalar>
VoxelGrid<Scalar> upsample_voxel(const VoxelGrid<Scalar>& v, const GridShape& target) {
  detail::Dims3 dims{v.shape().h_cells, v.shape().w_cells, v.shape().l_bins};
  const std::array<int, 3> want{target.h_cells, target.w_cells, target.l_bins};
  CellMatrix<Scalar> m = v.cells();
  for (int axis = 0; axis < 3; ++axis) {
    if (want[axis] < 1) throw ShapeError("upsample_voxel: target dims must be >= 1");
    if (want[axis] != dims[axis]) m = detail::resize_axis(m, dims, axis, want[axis]);
  }
  return VoxelGrid<Scalar>(target.with_channels(v.shape().channels), std::move(m), v.frame());
}

}  // namespace copercept
