#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "copercept/core/grid.hpp"
#include "copercept/core/pose.hpp"

namespace copercept {

/// Upright box; (x, y, z) is the geometric centre, yaw in degrees about +z.
struct Box3D {
  double x = 0.0;
  double y = 0.0;
  double z = 0.8;
  double length = 4.5;
  double width = 2.0;
  double height = 1.6;
  double yaw = 0.0;
  int object_id = 0;

  void validate() const;

  /// Footprint corners, counter-clockwise.
  std::array<Eigen::Vector2d, 4> footprint() const;
  bool contains_xy(const Eigen::Vector2d& p) const;

  bool operator==(const Box3D&) const = default;
};

/// Axis-aligned occluding segment; blocks rays at every height.
struct Wall {
  Eigen::Vector2d a = Eigen::Vector2d::Zero();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();

  void validate() const;
  bool operator==(const Wall& o) const { return a == o.a && b == o.b; }
};

struct AgentState {
  AgentId id = 0;
  Pose pose;
  double range_m = 60.0;
  double fov_deg = 360.0;

  bool operator==(const AgentState&) const = default;
};

struct Scene {
  double world_width_m = 64.0;
  double world_height_m = 64.0;
  std::vector<Box3D> boxes;
  std::vector<Wall> walls;
  std::vector<AgentState> agents;
  std::uint64_t seed = 0;

  /// Index of the agent with the given id; throws ParameterError if absent.
  std::size_t agent_index(AgentId id) const;
  const AgentState& agent(AgentId id) const { return agents[agent_index(id)]; }

  void validate() const;

  bool operator==(const Scene&) const = default;
};

struct SceneParams {
  int agent_count = 2;
  int box_count = 6;            // boxes besides the occluded targets
  int occluded_count = 1;       // boxes hidden from agent 0 behind a wall, visible to a sender
  int wall_count = 0;           // extra random walls
  double world_width_m = 64.0;
  double world_height_m = 64.0;
  double sensor_range_m = 60.0;
  double fov_deg = 360.0;
  double box_length_m = 4.5;
  double box_width_m = 2.0;
  double box_height_m = 1.6;
  double yaw_jitter_deg = 0.0;
  int max_attempts = 200;

  void validate() const;
};

/// Deterministic scene for a seed. Agent 0 sits at the world centre with yaw 0.
/// Target i is watched by agent 1 + (i mod (agent_count - 1)).
Scene generate_scene(std::uint64_t seed, const SceneParams& params);

struct RayHit {
  double distance = 0.0;
  enum class Kind { kNone, kBox, kWall } kind = Kind::kNone;
  int index = -1;
};

/// First wall or box surface hit by the ray from `origin` along unit `dir` within `max_range`.
RayHit cast_ray(const Scene& scene, const Eigen::Vector2d& origin, const Eigen::Vector2d& dir, double max_range);

/// True when the open segment from -> to crosses no wall and no box other than `ignore_box`.
bool line_of_sight(const Scene& scene, const Eigen::Vector2d& from, const Eigen::Vector2d& to, int ignore_box = -1);

/// Whether `p` lies inside the agent's range and field of view.
bool in_sensor_cone(const AgentState& agent, const Eigen::Vector2d& p);

/// Footprint sample points: a 5 x 3 lattice inset 1% from the edges.
std::vector<Eigen::Vector2d> footprint_samples(const Box3D& box);

/// Number of footprint samples of box `box_index` the agent sees.
int visible_samples(const Scene& scene, const AgentState& agent, int box_index);

/// World position of the centre of cell (h, w) of an agent grid.
Eigen::Vector2d cell_world(const AgentState& agent, const GridShape& shape, int h, int w);

}  // namespace copercept
