#include "copercept/fusion/compress.hpp"

#include "copercept/core/error.hpp"
#include "copercept/core/resample.hpp"

namespace copercept {

CompressionStrategy CompressionStrategy::named(const std::string& tag) {
  if (tag == "m1") return {tag, {4, 4, 2}};
  if (tag == "m2") return {tag, {4, 4, 4}};
  if (tag == "m3") return {tag, {2, 2, 2}};
  if (tag == "none") return {tag, {1, 1, 1}};
  throw ParameterError("unknown compression strategy '" + tag + "' (expected m1, m2, m3 or none)");
}

void CompressionStrategy::validate() const {
  for (int f : factors) {
    if (f != 1 && f != 2 && f != 4) throw ParameterError("compression factors must be 1, 2 or 4");
  }
  if (factors[0] != factors[1]) throw ParameterError("compression needs equal h and w factors");
}

VoxelFeature compress_voxel(const VoxelFeature& v, const CompressionStrategy& s) {
  s.validate();
  if (s.reduction() == 1) return v;
  return mean_pool_voxel(v, s.factors);
}

VoxelFeature decompress_voxel(const VoxelFeature& compressed, const GridShape& full) {
  if (compressed.shape().same_extent(full)) return compressed;
  return upsample_voxel(compressed, full);
}

GridShape compressed_shape(const GridShape& full, const CompressionStrategy& s) {
  GridShape c = full;
  c.h_cells /= s.factors[0];
  c.w_cells /= s.factors[1];
  c.l_bins /= s.factors[2];
  c.cell_size_m *= s.factors[0];
  c.z_size_m *= s.factors[2];
  return c;
}

}  // namespace copercept
