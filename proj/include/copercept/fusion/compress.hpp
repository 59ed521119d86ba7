#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "copercept/core/grid.hpp"

namespace copercept {

/// Per-axis (h, w, l) mean-pool factors applied to a voxel prior before sending.
struct CompressionStrategy {
  std::string tag = "m1";
  std::array<int, 3> factors{4, 4, 2};

  /// "m1" = (4,4,2), "m2" = (4,4,4), "m3" = (2,2,2), "none" = (1,1,1).
  static CompressionStrategy named(const std::string& tag);
  void validate() const;

  int reduction() const { return factors[0] * factors[1] * factors[2]; }
};

/// Pooled grid; throws ShapeError when a dimension is not divisible by its factor.
VoxelFeature compress_voxel(const VoxelFeature& v, const CompressionStrategy& s);

/// Trilinear upsample of a compressed prior back to the sender's full grid.
VoxelFeature decompress_voxel(const VoxelFeature& compressed, const GridShape& full);

/// Payload bytes of a float32 voxel grid.
inline std::size_t voxel_bytes(const GridShape& s) { return static_cast<std::size_t>(s.voxels()) * s.channels * 4; }

/// Shape after compression (does not check divisibility).
GridShape compressed_shape(const GridShape& full, const CompressionStrategy& s);

}  // namespace copercept
