#include "copercept/sim/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "copercept/core/error.hpp"

namespace copercept {

namespace {

constexpr double kEps = 1e-9;

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

// Ray parameter t at which origin + t * dir meets segment [a, b], if it does.
std::optional<double> ray_segment(const Eigen::Vector2d& origin, const Eigen::Vector2d& dir, const Eigen::Vector2d& a,
                                  const Eigen::Vector2d& b) {
  const Eigen::Vector2d e = b - a;
  const double denom = cross(dir, e);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const Eigen::Vector2d ao = a - origin;
  const double t = cross(ao, e) / denom;
  const double s = cross(ao, dir) / denom;
  if (t < kEps || s < -kEps || s > 1.0 + kEps) return std::nullopt;
  return t;
}

double point_segment_distance(const Eigen::Vector2d& p, const Wall& w) {
  const Eigen::Vector2d e = w.b - w.a;
  const double len2 = e.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - w.a).dot(e) / len2, 0.0, 1.0) : 0.0;
  return (w.a + t * e - p).norm();
}

double half_diagonal(const Box3D& b) { return 0.5 * std::hypot(b.length, b.width); }

bool inside_world(const Scene& s, const Eigen::Vector2d& p, double inset) {
  return std::abs(p.x()) <= 0.5 * s.world_width_m - inset && std::abs(p.y()) <= 0.5 * s.world_height_m - inset;
}

class Generator {
 public:
  Generator(std::mt19937_64& rng, const SceneParams& p) : rng_(rng), p_(p) {}

  std::optional<Scene> attempt(std::string& failure) {
    Scene s;
    s.world_width_m = p_.world_width_m;
    s.world_height_m = p_.world_height_m;
    s.agents.resize(p_.agent_count);
    std::vector<bool> placed(p_.agent_count, false);
    for (int a = 0; a < p_.agent_count; ++a) {
      s.agents[a].id = static_cast<AgentId>(a);
      s.agents[a].range_m = p_.sensor_range_m;
      s.agents[a].fov_deg = p_.fov_deg;
    }
    placed[0] = true;

    std::array<Eigen::Vector2d, 4> dirs = {Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), Eigen::Vector2d(-1, 0),
                                           Eigen::Vector2d(0, -1)};
    std::shuffle(dirs.begin(), dirs.end(), rng_);
    std::vector<AgentId> watcher;
    for (int i = 0; i < p_.occluded_count; ++i) {
      const Eigen::Vector2d u = dirs[i];
      const Eigen::Vector2d v(-u.y(), u.x());
      const double d = uniform(8.0, 16.0);
      Box3D box = make_box(d * u + uniform(-4.0, 4.0) * v, i);
      s.boxes.push_back(box);
      s.walls.push_back(shadow_wall(box, u, v, d - 4.0));

      const auto sender = static_cast<AgentId>(1 + i % (p_.agent_count - 1));
      watcher.push_back(sender);
      if (!placed[sender]) {
        const Eigen::Vector2d c(box.x, box.y);
        s.agents[sender].pose = make_pose(c + uniform(5.0, 9.0) * u + uniform(-4.0, 4.0) * v);
        placed[sender] = true;
      }
    }
    for (int a = 1; a < p_.agent_count; ++a) {
      if (placed[a]) continue;
      bool ok = false;
      for (int tries = 0; tries < 50 && !ok; ++tries) {
        const Eigen::Vector2d c = random_point(s, 2.0);
        ok = std::all_of(s.agents.begin(), s.agents.begin() + a, [&](const AgentState& o) {
          return (Eigen::Vector2d(o.pose.x, o.pose.y) - c).norm() >= 4.0;
        });
        if (ok) s.agents[a].pose = make_pose(c);
      }
      if (!ok) return fail(failure, "no free position for agent " + std::to_string(a));
    }
    for (int i = 0; i < p_.wall_count; ++i) {
      bool ok = false;
      for (int tries = 0; tries < 50 && !ok; ++tries) {
        const Eigen::Vector2d c = random_point(s, 4.0);
        if (c.norm() < 6.0) continue;
        const double half = 0.5 * uniform(3.0, 8.0);
        const bool along_x = uniform(0.0, 1.0) < 0.5;
        const Eigen::Vector2d e = along_x ? Eigen::Vector2d(half, 0) : Eigen::Vector2d(0, half);
        Wall w{c - e, c + e};
        ok = wall_is_clear(s, w);
        if (ok) s.walls.push_back(w);
      }
      if (!ok) return fail(failure, "no free position for random wall " + std::to_string(i));
    }
    for (int j = 0; j < p_.box_count; ++j) {
      bool ok = false;
      for (int tries = 0; tries < 50 && !ok; ++tries) {
        Box3D box = make_box(random_point(s, 3.0), static_cast<int>(s.boxes.size()));
        if (!box_is_clear(s, box)) continue;
        s.boxes.push_back(box);
        ok = visible_samples(s, s.agents[0], static_cast<int>(s.boxes.size()) - 1) > 0;
        if (!ok) s.boxes.pop_back();
      }
      if (!ok) return fail(failure, "no visible free position for box " + std::to_string(j));
    }
    return check(s, watcher, failure);
  }

 private:
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  Pose make_pose(const Eigen::Vector2d& c) {
    Pose p;
    p.x = c.x();
    p.y = c.y();
    p.yaw = normalize_degrees(uniform(-180.0, 180.0));
    return p;
  }

  Box3D make_box(const Eigen::Vector2d& c, int id) {
    Box3D b;
    b.x = c.x();
    b.y = c.y();
    b.length = p_.box_length_m;
    b.width = p_.box_width_m;
    b.height = p_.box_height_m;
    b.z = 0.5 * p_.box_height_m;
    b.yaw = p_.yaw_jitter_deg > 0.0 ? uniform(-p_.yaw_jitter_deg, p_.yaw_jitter_deg) : 0.0;
    b.object_id = id;
    return b;
  }

  // Segment on the line {p . u = dist} covering the box's shadow from the origin.
  static Wall shadow_wall(const Box3D& box, const Eigen::Vector2d& u, const Eigen::Vector2d& v, double dist) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const Eigen::Vector2d& c : box.footprint()) {
      const double s = c.dot(v) * dist / c.dot(u);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    return Wall{dist * u + (lo - 0.5) * v, dist * u + (hi + 0.5) * v};
  }

  Eigen::Vector2d random_point(const Scene& s, double inset) {
    return {uniform(-0.5 * s.world_width_m + inset, 0.5 * s.world_width_m - inset),
            uniform(-0.5 * s.world_height_m + inset, 0.5 * s.world_height_m - inset)};
  }

  static bool wall_is_clear(const Scene& s, const Wall& w) {
    for (const Box3D& b : s.boxes) {
      if (point_segment_distance({b.x, b.y}, w) < half_diagonal(b) + 0.5) return false;
    }
    for (const AgentState& a : s.agents) {
      if (point_segment_distance({a.pose.x, a.pose.y}, w) < 1.5) return false;
    }
    return true;
  }

  static bool box_is_clear(const Scene& s, const Box3D& box) {
    const Eigen::Vector2d c(box.x, box.y);
    for (const Box3D& o : s.boxes) {
      if ((Eigen::Vector2d(o.x, o.y) - c).norm() < half_diagonal(o) + half_diagonal(box) + 0.5) return false;
    }
    for (const Wall& w : s.walls) {
      if (point_segment_distance(c, w) < half_diagonal(box) + 0.5) return false;
    }
    for (const AgentState& a : s.agents) {
      if ((Eigen::Vector2d(a.pose.x, a.pose.y) - c).norm() < half_diagonal(box) + 1.5) return false;
    }
    return true;
  }

  std::optional<Scene> check(const Scene& s, const std::vector<AgentId>& watcher, std::string& failure) {
    for (const AgentState& a : s.agents) {
      const Eigen::Vector2d p(a.pose.x, a.pose.y);
      if (!inside_world(s, p, 0.5)) return fail(failure, "agent " + std::to_string(a.id) + " outside the world");
      for (const Box3D& b : s.boxes) {
        if ((Eigen::Vector2d(b.x, b.y) - p).norm() < half_diagonal(b) + 1.0) {
          return fail(failure, "agent " + std::to_string(a.id) + " overlaps a box");
        }
      }
      for (const Wall& w : s.walls) {
        if (point_segment_distance(p, w) < 1.0) return fail(failure, "agent " + std::to_string(a.id) + " on a wall");
      }
    }
    for (const Box3D& b : s.boxes) {
      for (const Wall& w : s.walls) {
        if (point_segment_distance({b.x, b.y}, w) < half_diagonal(b) + 0.25) {
          return fail(failure, "box " + std::to_string(b.object_id) + " overlaps a wall");
        }
      }
    }
    for (int i = 0; i < p_.occluded_count; ++i) {
      const int samples = static_cast<int>(footprint_samples(s.boxes[i]).size());
      if (visible_samples(s, s.agents[0], i) != 0) {
        return fail(failure, "occluded box " + std::to_string(i) + " is visible to agent 0");
      }
      if (visible_samples(s, s.agent(watcher[i]), i) != samples) {
        return fail(failure, "occluded box " + std::to_string(i) + " is not fully visible to agent " +
                                 std::to_string(watcher[i]));
      }
    }
    for (std::size_t i = p_.occluded_count; i < s.boxes.size(); ++i) {
      if (visible_samples(s, s.agents[0], static_cast<int>(i)) == 0) {
        return fail(failure, "box " + std::to_string(i) + " is hidden from agent 0");
      }
    }
    return s;
  }

  static std::optional<Scene> fail(std::string& failure, std::string why) {
    failure = std::move(why);
    return std::nullopt;
  }

  std::mt19937_64& rng_;
  const SceneParams& p_;
};

}  // namespace

void Box3D::validate() const {
  if (!(length > 0.0) || !(width > 0.0) || !(height > 0.0)) {
    throw ParameterError("box " + std::to_string(object_id) + " must have positive length, width and height");
  }
}

std::array<Eigen::Vector2d, 4> Box3D::footprint() const {
  const double r = yaw * std::numbers::pi / 180.0;
  const Eigen::Vector2d ax(std::cos(r), std::sin(r));
  const Eigen::Vector2d ay(-ax.y(), ax.x());
  const Eigen::Vector2d c(x, y), hl = 0.5 * length * ax, hw = 0.5 * width * ay;
  return {c - hl - hw, c + hl - hw, c + hl + hw, c - hl + hw};
}

bool Box3D::contains_xy(const Eigen::Vector2d& p) const {
  const double r = yaw * std::numbers::pi / 180.0;
  const Eigen::Vector2d d = p - Eigen::Vector2d(x, y);
  const double along = d.x() * std::cos(r) + d.y() * std::sin(r);
  const double across = -d.x() * std::sin(r) + d.y() * std::cos(r);
  return std::abs(along) <= 0.5 * length && std::abs(across) <= 0.5 * width;
}

void Wall::validate() const {
  if (a == b) throw ParameterError("wall endpoints must differ");
  if (a.x() != b.x() && a.y() != b.y()) throw ParameterError("walls must be axis-aligned");
}

std::size_t Scene::agent_index(AgentId id) const {
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (agents[i].id == id) return i;
  }
  throw ParameterError("no agent with id " + std::to_string(id));
}

void Scene::validate() const {
  if (!(world_width_m > 0.0) || !(world_height_m > 0.0)) throw ParameterError("world extent must be positive");
  if (agents.empty()) throw ParameterError("scene needs at least one agent");
  for (const AgentState& a : agents) {
    if (!inside_world(*this, {a.pose.x, a.pose.y}, 0.0)) {
      throw ParameterError("agent " + std::to_string(a.id) + " lies outside the world extent");
    }
    if (!(a.range_m > 0.0) || !(a.fov_deg > 0.0) || a.fov_deg > 360.0) {
      throw ParameterError("agent " + std::to_string(a.id) + " has an invalid range or field of view");
    }
  }
  for (const Box3D& b : boxes) b.validate();
  for (const Wall& w : walls) w.validate();
}

void SceneParams::validate() const {
  if (agent_count < 1) throw ParameterError("agent_count must be >= 1");
  if (box_count < 0 || wall_count < 0 || occluded_count < 0) throw ParameterError("counts must be >= 0");
  if (occluded_count > 4) throw ParameterError("occluded_count must be <= 4");
  if (!(world_width_m > 0.0) || !(world_height_m > 0.0) || !(sensor_range_m > 0.0)) {
    throw ParameterError("world extent and sensor range must be positive");
  }
  if (!(box_length_m > 0.0) || !(box_width_m > 0.0) || !(box_height_m > 0.0)) {
    throw ParameterError("box dimensions must be positive");
  }
  if (!(fov_deg > 0.0) || fov_deg > 360.0) throw ParameterError("fov_deg must be in (0, 360]");
  if (yaw_jitter_deg < 0.0) throw ParameterError("yaw_jitter_deg must be >= 0");
  if (max_attempts < 1) throw ParameterError("max_attempts must be >= 1");
}

Scene generate_scene(std::uint64_t seed, const SceneParams& params) {
  params.validate();
  if (params.occluded_count > 0 && params.agent_count < 2) {
    throw GenerationError("occluded_count > 0 needs at least two agents");
  }
  if (params.occluded_count > params.agent_count - 1) {
    throw GenerationError("occluded_count must not exceed the number of senders (agent_count - 1)");
  }
  std::mt19937_64 rng(seed);
  Generator gen(rng, params);
  std::string failure;
  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    if (auto s = gen.attempt(failure)) {
      s->seed = seed;
      return *s;
    }
  }
  throw GenerationError("no scene after " + std::to_string(params.max_attempts) + " attempts: " + failure);
}

RayHit cast_ray(const Scene& scene, const Eigen::Vector2d& origin, const Eigen::Vector2d& dir, double max_range) {
  RayHit hit;
  hit.distance = max_range;
  for (std::size_t i = 0; i < scene.walls.size(); ++i) {
    auto t = ray_segment(origin, dir, scene.walls[i].a, scene.walls[i].b);
    if (t && *t <= hit.distance) {
      hit = {*t, RayHit::Kind::kWall, static_cast<int>(i)};
    }
  }
  for (std::size_t i = 0; i < scene.boxes.size(); ++i) {
    const auto fp = scene.boxes[i].footprint();
    for (int e = 0; e < 4; ++e) {
      auto t = ray_segment(origin, dir, fp[e], fp[(e + 1) % 4]);
      if (t && *t < hit.distance) hit = {*t, RayHit::Kind::kBox, static_cast<int>(i)};
    }
  }
  if (hit.kind == RayHit::Kind::kNone) hit.distance = 0.0;
  return hit;
}

bool line_of_sight(const Scene& scene, const Eigen::Vector2d& from, const Eigen::Vector2d& to, int ignore_box) {
  const Eigen::Vector2d delta = to - from;
  const double dist = delta.norm();
  if (dist < kEps) return true;
  const Eigen::Vector2d dir = delta / dist;
  for (const Wall& w : scene.walls) {
    auto t = ray_segment(from, dir, w.a, w.b);
    if (t && *t < dist - kEps) return false;
  }
  for (std::size_t i = 0; i < scene.boxes.size(); ++i) {
    if (static_cast<int>(i) == ignore_box) continue;
    const auto fp = scene.boxes[i].footprint();
    for (int e = 0; e < 4; ++e) {
      auto t = ray_segment(from, dir, fp[e], fp[(e + 1) % 4]);
      if (t && *t < dist - kEps) return false;
    }
  }
  return true;
}

bool in_sensor_cone(const AgentState& agent, const Eigen::Vector2d& p) {
  const Eigen::Vector2d d = p - Eigen::Vector2d(agent.pose.x, agent.pose.y);
  if (d.norm() > agent.range_m) return false;
  if (agent.fov_deg >= 360.0) return true;
  const double bearing = std::atan2(d.y(), d.x()) * 180.0 / std::numbers::pi;
  return std::abs(normalize_degrees(bearing - agent.pose.yaw)) <= 0.5 * agent.fov_deg;
}

std::vector<Eigen::Vector2d> footprint_samples(const Box3D& box) {
  const double r = box.yaw * std::numbers::pi / 180.0;
  const Eigen::Vector2d ax(std::cos(r), std::sin(r));
  const Eigen::Vector2d ay(-ax.y(), ax.x());
  std::vector<Eigen::Vector2d> out;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double a = (-0.5 + 0.01 + 0.98 * i / 4.0) * box.length;
      const double b = (-0.5 + 0.01 + 0.98 * j / 2.0) * box.width;
      out.push_back(Eigen::Vector2d(box.x, box.y) + a * ax + b * ay);
    }
  }
  return out;
}

int visible_samples(const Scene& scene, const AgentState& agent, int box_index) {
  const Eigen::Vector2d origin(agent.pose.x, agent.pose.y);
  int count = 0;
  for (const Eigen::Vector2d& p : footprint_samples(scene.boxes.at(box_index))) {
    if (in_sensor_cone(agent, p) && line_of_sight(scene, origin, p, box_index)) ++count;
  }
  return count;
}

Eigen::Vector2d cell_world(const AgentState& agent, const GridShape& shape, int h, int w) {
  const Eigen::Vector2d local = cell_center(shape, h, w);
  return (agent.pose.isometry() * Eigen::Vector3d(local.x(), local.y(), 0.0)).head<2>();
}

}  // namespace copercept
