#include "copercept/sim/encoders.hpp"

#include <algorithm>
#include <cmath>

#include "copercept/core/collapse.hpp"
#include "copercept/core/error.hpp"

namespace copercept {

namespace {

void require_proxy_channels(const GridShape& shape) {
  shape.validate();
  if (shape.channels < kMinProxyChannels) {
    throw ShapeError("proxy encoders need at least " + std::to_string(kMinProxyChannels) + " channels, got " +
                     std::to_string(shape.channels));
  }
}

// Index of the box whose footprint contains p and that the agent sees at p, or -1.
int visible_box_at(const Scene& scene, const AgentState& agent, const Eigen::Vector2d& p) {
  for (std::size_t i = 0; i < scene.boxes.size(); ++i) {
    if (!scene.boxes[i].contains_xy(p)) continue;
    if (!in_sensor_cone(agent, p)) return -1;
    return line_of_sight(scene, {agent.pose.x, agent.pose.y}, p, static_cast<int>(i)) ? static_cast<int>(i) : -1;
  }
  return -1;
}

}  // namespace

LidarEncoding lidar_proxy_encode(const Scene& scene, AgentId agent_id, const GridShape& shape,
                                 const Linear& collapse) {
  require_proxy_channels(shape);
  const AgentState& agent = scene.agent(agent_id);
  VoxelFeature v(shape, agent_id);
  const double top = shape.l_bins * shape.z_size_m;
  for (int h = 0; h < shape.h_cells; ++h) {
    for (int w = 0; w < shape.w_cells; ++w) {
      const int box = visible_box_at(scene, agent, cell_world(agent, shape, h, w));
      if (box < 0) continue;
      const Box3D& b = scene.boxes[box];
      for (int l = 0; l < shape.l_bins; ++l) {
        const double z = (l + 0.5) * shape.z_size_m;
        if (z < b.z - 0.5 * b.height || z > b.z + 0.5 * b.height) continue;
        v(h, w, l, kOccupancyChannel) = 1.0f;
        v(h, w, l, kHeightChannel) = static_cast<float>(z / top);
      }
    }
  }
  BevFeature bev = collapse_to_bev(v, collapse);
  return {std::move(v), std::move(bev)};
}

std::vector<double> depth_distribution(double hit_distance, bool has_hit, double range_m, int bins) {
  if (bins < 1 || !(range_m > 0.0)) throw ParameterError("depth distribution needs bins >= 1 and range > 0");
  std::vector<double> d(bins, 1.0 / bins);
  if (!has_hit) return d;
  const double width = range_m / bins;
  double total = 0.0;
  for (int b = 0; b < bins; ++b) {
    d[b] = std::max(0.0, 1.0 - std::abs((b + 0.5) * width - hit_distance) / width);
    total += d[b];
  }
  if (total <= 0.0) {
    std::fill(d.begin(), d.end(), 1.0 / bins);
    return d;
  }
  for (double& x : d) x /= total;
  return d;
}

DepthRay camera_ray(const Scene& scene, const AgentState& agent, const GridShape& shape, int h, int w) {
  DepthRay ray;
  const Eigen::Vector2d origin(agent.pose.x, agent.pose.y);
  const Eigen::Vector2d p = cell_world(agent, shape, h, w);
  const Eigen::Vector2d delta = p - origin;
  ray.cell_distance = delta.norm();
  if (ray.cell_distance > 0.0 && in_sensor_cone(agent, origin + delta / ray.cell_distance * 1e-6)) {
    ray.hit = cast_ray(scene, origin, delta / ray.cell_distance, agent.range_m);
  }
  ray.weights = depth_distribution(ray.hit.distance, ray.hit.kind != RayHit::Kind::kNone, agent.range_m,
                                   shape.l_bins);
  return ray;
}

VoxelFeature camera_proxy_encode(const Scene& scene, AgentId agent_id, const GridShape& shape) {
  require_proxy_channels(shape);
  const AgentState& agent = scene.agent(agent_id);
  VoxelFeature v(shape, agent_id);
  const double bin_width = agent.range_m / shape.l_bins;
  for (int h = 0; h < shape.h_cells; ++h) {
    for (int w = 0; w < shape.w_cells; ++w) {
      const DepthRay ray = camera_ray(scene, agent, shape, h, w);
      if (ray.hit.kind == RayHit::Kind::kNone || ray.cell_distance > agent.range_m) continue;
      const int bin = std::min(static_cast<int>(ray.cell_distance / bin_width), shape.l_bins - 1);
      const int channel = ray.hit.kind == RayHit::Kind::kBox ? kVehicleChannel : kWallChannel;
      const auto weight = static_cast<float>(ray.weights[bin]);
      for (int l = 0; l < shape.l_bins; ++l) v(h, w, l, channel) = weight;
    }
  }
  return v;
}

BevFeature ideal_heatmap(const Scene& scene, AgentId agent_id, const GridShape& shape) {
  shape.validate();
  const AgentState& agent = scene.agent(agent_id);
  BevFeature out(shape.with_channels(1), agent_id);
  for (int h = 0; h < shape.h_cells; ++h) {
    for (int w = 0; w < shape.w_cells; ++w) {
      if (visible_box_at(scene, agent, cell_world(agent, shape, h, w)) >= 0) out(h, w, 0) = 1.0f;
    }
  }
  return out;
}

}  // namespace copercept
