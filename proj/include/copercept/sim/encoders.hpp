#pragma once

#include <vector>

#include "copercept/core/grid.hpp"
#include "copercept/core/weights.hpp"
#include "copercept/sim/scene.hpp"

namespace copercept {

// Channel layout shared by the proxy encoders (needs channels >= 4).
inline constexpr int kOccupancyChannel = 0;
inline constexpr int kHeightChannel = 1;
inline constexpr int kVehicleChannel = 2;
inline constexpr int kWallChannel = 3;
inline constexpr int kMinProxyChannels = 4;

struct LidarEncoding {
  VoxelFeature voxel;
  BevFeature bev;
};

/// Occupancy + height code for every box cell the agent can see; bev = collapse(voxel, collapse).
LidarEncoding lidar_proxy_encode(const Scene& scene, AgentId agent, const GridShape& shape, const Linear& collapse);

/// Depth distribution over L range bins of width range/L along the ray through a cell.
struct DepthRay {
  std::vector<double> weights;  // sums to 1
  RayHit hit;
  double cell_distance = 0.0;
};

/// Triangular kernel (half-width one bin) around `hit_distance`; uniform when there is no hit.
std::vector<double> depth_distribution(double hit_distance, bool has_hit, double range_m, int bins);

DepthRay camera_ray(const Scene& scene, const AgentState& agent, const GridShape& shape, int h, int w);

/// voxel(h, w, l) = D[bin(distance to cell)] * code(class of first hit), identical for every l.
VoxelFeature camera_proxy_encode(const Scene& scene, AgentId agent, const GridShape& shape);

/// 1 on cells the agent's LiDAR proxy sees inside a box, 0 elsewhere (one channel).
BevFeature ideal_heatmap(const Scene& scene, AgentId agent, const GridShape& shape);

}  // namespace copercept
