#pragma once

#include <optional>
#include <vector>

#include "copercept/core/grid.hpp"
#include "copercept/core/weights.hpp"

namespace copercept {

/// H x W x L x 1 occupancy probabilities.
using OccupancyGrid = VoxelGrid<float>;

/// One round of self-attention over each cell's local graph: the ego feature, the
/// co-located feature of every sender (ordered by frame id), and the ego features of the
/// in-bounds 6-neighbours. Output = attention output at the ego node + ego input.
VoxelFeature mix_voxel(const VoxelFeature& ego, const std::vector<VoxelFeature>& senders,
                       const AttentionProjections& proj);

/// sigmoid(v x w^T + b) per voxel; `head` maps C -> 1.
OccupancyGrid occupancy_head(const VoxelFeature& v_mix, const Linear& head);

/// v_img * occ + proj(v_mix). `proj` is only consulted when the channel counts differ.
VoxelFeature occ_gate(const VoxelFeature& v_img, const OccupancyGrid& occ, const VoxelFeature& v_mix,
                      const std::optional<Linear>& proj = std::nullopt);

struct HmfWeights {
  Linear expand_lidar;
  Linear expand_camera;
  Linear concat;            // C x 2C
  std::vector<Linear> mlp;  // ReLU between layers, none after the last

  static HmfWeights from(const WeightSet& w, const ModelDims& d);
};

/// B_cat = concat(expand(L), expand(I)) projection; B_attn = MLP(attn) + expand(L) where each
/// cell's expanded LiDAR feature attends over the expanded camera features in a window x window
/// neighbourhood (window 1 = the cell itself). Returns B_cat + B_attn.
BevFeature hmf(const BevFeature& b_lidar, const BevFeature& b_img, const HmfWeights& w, int window = 1);

struct Stage1Weights {
  Linear collapse_lidar;
  Linear collapse_camera;
  AttentionProjections mix;
  Linear occ;
  std::optional<Linear> gate;
  HmfWeights hmf;

  static Stage1Weights from(const WeightSet& w, const ModelDims& d);
};

struct Stage1Output {
  VoxelFeature v_mix;
  OccupancyGrid occupancy;
  VoxelFeature v_img_gated;
  BevFeature b_lidar;
  BevFeature b_img;
  BevFeature fused;
};

/// Voxel prior mixing, occupancy gating and HMF for one agent. With `mix_enabled` false the
/// prior is the agent's own LiDAR voxel and `priors` is ignored.
Stage1Output fuse_stage1(const VoxelFeature& v_lidar, const VoxelFeature& v_img, const std::vector<VoxelFeature>& priors,
                         bool mix_enabled, const Stage1Weights& w, int hmf_window = 1);

}  // namespace copercept
