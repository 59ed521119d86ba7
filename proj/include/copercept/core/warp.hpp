#pragma once

#include <cmath>

#include <Eigen/Geometry>

#include "copercept/core/grid.hpp"
#include "copercept/core/pose.hpp"

namespace copercept {

namespace detail {

// Fractions this close to a lattice point are snapped onto it, so grid-aligned
// transforms (identity, whole-cell shifts, quarter turns) resample exactly.
constexpr double kSnap = 1e-9;

struct AxisSample {
  int lo;
  double t;
};

inline AxisSample axis_sample(double f) {
  double lo = std::floor(f);
  double t = f - lo;
  if (t < kSnap) {
    t = 0.0;
  } else if (t > 1.0 - kSnap) {
    lo += 1.0;
    t = 0.0;
  }
  return {static_cast<int>(lo), t};
}

}  // namespace detail

/// Resamples `v` into a grid of shape `target` (channels taken from `v`).
///
/// `relative_pose` is the pose of v's frame expressed in the target frame. Each
/// target cell centre is mapped back into v's frame and trilinearly sampled;
/// samples outside v contribute zero.
template <typename Scalar>
VoxelGrid<Scalar> warp_to_frame(const VoxelGrid<Scalar>& v, const Pose& relative_pose, const GridShape& target,
                                AgentId target_frame = 0) {
  const GridShape& src = v.shape();
  const GridShape out_shape = target.with_channels(src.channels);
  VoxelGrid<Scalar> out(out_shape, target_frame);
  if (relative_pose == Pose{} && out_shape == src) {
    out.cells() = v.cells();
    return out;
  }
  const Eigen::Isometry3d to_source = relative_pose.isometry().inverse();
  for (int h = 0; h < out_shape.h_cells; ++h) {
    for (int w = 0; w < out_shape.w_cells; ++w) {
      const Eigen::Vector2d xy = cell_center(out_shape, h, w);
      for (int l = 0; l < out_shape.l_bins; ++l) {
        const Eigen::Vector3d p_t(xy.x(), xy.y(), (l + 0.5) * out_shape.z_size_m);
        const Eigen::Vector3d p_s = to_source * p_t;
        const Eigen::Vector2d hw = cell_coords(src, p_s.head<2>());
        const detail::AxisSample sh = detail::axis_sample(hw.x());
        const detail::AxisSample sw = detail::axis_sample(hw.y());
        const detail::AxisSample sl = detail::axis_sample(p_s.z() / src.z_size_m - 0.5);
        auto dst = out.cell(h, w, l);
        bool first = true;
        for (int dh = 0; dh < 2; ++dh) {
          const double wh = dh ? sh.t : 1.0 - sh.t;
          const int ih = sh.lo + dh;
          if (wh == 0.0 || ih < 0 || ih >= src.h_cells) continue;
          for (int dw = 0; dw < 2; ++dw) {
            const double ww = dw ? sw.t : 1.0 - sw.t;
            const int iw = sw.lo + dw;
            if (ww == 0.0 || iw < 0 || iw >= src.w_cells) continue;
            for (int dl = 0; dl < 2; ++dl) {
              const double wl = dl ? sl.t : 1.0 - sl.t;
              const int il = sl.lo + dl;
              if (wl == 0.0 || il < 0 || il >= src.l_bins) continue;
              const Scalar weight = static_cast<Scalar>(wh * ww * wl);
              if (first) {
                dst = weight * v.cell(ih, iw, il);
                first = false;
              } else {
                dst += weight * v.cell(ih, iw, il);
              }
            }
          }
        }
      }
    }
  }
  return out;
}

/// Planar counterpart of the voxel warp: bilinear sampling at z = 0.
template <typename Scalar>
BevGrid<Scalar> warp_to_frame(const BevGrid<Scalar>& b, const Pose& relative_pose, const GridShape& target,
                              AgentId target_frame = 0) {
  const GridShape& src = b.shape();
  GridShape out_shape = target.with_channels(src.channels);
  BevGrid<Scalar> out(out_shape, target_frame);
  if (relative_pose == Pose{} && out_shape.h_cells == src.h_cells && out_shape.w_cells == src.w_cells &&
      out_shape.cell_size_m == src.cell_size_m) {
    out.cells() = b.cells();
    return out;
  }
  const Eigen::Isometry3d to_source = relative_pose.isometry().inverse();
  for (int h = 0; h < out_shape.h_cells; ++h) {
    for (int w = 0; w < out_shape.w_cells; ++w) {
      const Eigen::Vector2d xy = cell_center(out_shape, h, w);
      const Eigen::Vector3d p_s = to_source * Eigen::Vector3d(xy.x(), xy.y(), 0.0);
      const Eigen::Vector2d hw = cell_coords(src, p_s.head<2>());
      const detail::AxisSample sh = detail::axis_sample(hw.x());
      const detail::AxisSample sw = detail::axis_sample(hw.y());
      auto dst = out.cell(h, w);
      bool first = true;
      for (int dh = 0; dh < 2; ++dh) {
        const double wh = dh ? sh.t : 1.0 - sh.t;
        const int ih = sh.lo + dh;
        if (wh == 0.0 || ih < 0 || ih >= src.h_cells) continue;
        for (int dw = 0; dw < 2; ++dw) {
          const double ww = dw ? sw.t : 1.0 - sw.t;
          const int iw = sw.lo + dw;
          if (ww == 0.0 || iw < 0 || iw >= src.w_cells) continue;
          const Scalar weight = static_cast<Scalar>(wh * ww);
          if (first) {
            dst = weight * b.cell(ih, iw);
            first = false;
          } else {
            dst += weight * b.cell(ih, iw);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace copercept
