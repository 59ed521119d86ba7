#include "copercept/sim/scenario.hpp"

#include <fstream>
#include <sstream>

#include "../yaml_util.hpp"

namespace copercept {

namespace {

Box3D parse_box(const YAML::Node& n, const std::string& f) {
  yaml::check_keys(n, f, {"x", "y", "z", "length", "width", "height", "yaw", "id"});
  Box3D b;
  yaml::read(n, "x", f, b.x);
  yaml::read(n, "y", f, b.y);
  yaml::read(n, "length", f, b.length);
  yaml::read(n, "width", f, b.width);
  yaml::read(n, "height", f, b.height);
  b.z = 0.5 * b.height;
  yaml::read(n, "z", f, b.z);
  yaml::read(n, "yaw", f, b.yaw);
  yaml::read(n, "id", f, b.object_id);
  if (!(b.length > 0.0) || !(b.width > 0.0) || !(b.height > 0.0)) throw ConfigError(f, "box sizes must be > 0");
  return b;
}

Wall parse_wall(const YAML::Node& n, const std::string& f) {
  const auto v = yaml::as_list<double>(n, f);
  if (v.size() != 4) throw ConfigError(f, "a wall is [x1, y1, x2, y2]");
  Wall w{{v[0], v[1]}, {v[2], v[3]}};
  try {
    w.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(f, e.what());
  }
  return w;
}

AgentState parse_agent(const YAML::Node& n, const std::string& f, std::size_t index) {
  yaml::check_keys(n, f, {"id", "x", "y", "yaw", "range", "fov"});
  AgentState a;
  a.id = static_cast<AgentId>(index);
  yaml::read(n, "id", f, a.id);
  yaml::read(n, "x", f, a.pose.x);
  yaml::read(n, "y", f, a.pose.y);
  yaml::read(n, "yaw", f, a.pose.yaw);
  a.pose.yaw = normalize_degrees(a.pose.yaw);
  yaml::read(n, "range", f, a.range_m);
  yaml::read(n, "fov", f, a.fov_deg);
  return a;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("scenario", std::string("not valid YAML: ") + e.what());
  }
  if (!root || root.IsNull()) return {};
  yaml::check_keys(root, "", {"seed", "world", "generate", "boxes", "walls", "agents", "noise"});
  Scenario s;
  if (root["seed"]) s.seed = yaml::as<std::uint64_t>(root["seed"], "seed");
  SceneParams& p = s.params;
  if (const YAML::Node w = root["world"]) {
    yaml::check_keys(w, "world", {"width", "height"});
    yaml::read(w, "width", "world", p.world_width_m);
    yaml::read(w, "height", "world", p.world_height_m);
  }
  if (const YAML::Node g = root["generate"]) {
    const std::string f = "generate";
    yaml::check_keys(g, f, {"agents", "boxes", "occluded", "walls", "sensor_range", "fov", "box", "yaw_jitter",
                            "max_attempts"});
    yaml::read(g, "agents", f, p.agent_count);
    yaml::read(g, "boxes", f, p.box_count);
    yaml::read(g, "occluded", f, p.occluded_count);
    yaml::read(g, "walls", f, p.wall_count);
    yaml::read(g, "sensor_range", f, p.sensor_range_m);
    yaml::read(g, "fov", f, p.fov_deg);
    yaml::read(g, "yaw_jitter", f, p.yaw_jitter_deg);
    yaml::read(g, "max_attempts", f, p.max_attempts);
    if (const YAML::Node b = g["box"]) {
      yaml::check_keys(b, "generate.box", {"length", "width", "height"});
      yaml::read(b, "length", "generate.box", p.box_length_m);
      yaml::read(b, "width", "generate.box", p.box_width_m);
      yaml::read(b, "height", "generate.box", p.box_height_m);
    }
  }
  try {
    p.validate();
  } catch (const ParameterError& e) {
    throw ConfigError("generate", e.what());
  }
  if (root["agents"]) {
    Scene scene;
    scene.world_width_m = p.world_width_m;
    scene.world_height_m = p.world_height_m;
    const YAML::Node agents = root["agents"];
    if (!agents.IsSequence()) throw ConfigError("agents", "must be a list");
    for (std::size_t i = 0; i < agents.size(); ++i) {
      scene.agents.push_back(parse_agent(agents[i], "agents[" + std::to_string(i) + "]", i));
    }
    if (const YAML::Node boxes = root["boxes"]) {
      if (!boxes.IsSequence()) throw ConfigError("boxes", "must be a list");
      for (std::size_t i = 0; i < boxes.size(); ++i) {
        scene.boxes.push_back(parse_box(boxes[i], "boxes[" + std::to_string(i) + "]"));
      }
    }
    if (const YAML::Node walls = root["walls"]) {
      if (!walls.IsSequence()) throw ConfigError("walls", "must be a list");
      for (std::size_t i = 0; i < walls.size(); ++i) {
        scene.walls.push_back(parse_wall(walls[i], "walls[" + std::to_string(i) + "]"));
      }
    }
    scene.seed = s.seed.value_or(0);
    try {
      scene.validate();
    } catch (const ParameterError& e) {
      throw ConfigError("agents", e.what());
    }
    s.scene = std::move(scene);
  } else if (root["boxes"] || root["walls"]) {
    throw ConfigError("agents", "an explicit scene needs an agents list");
  }
  if (const YAML::Node n = root["noise"]) {
    yaml::check_keys(n, "noise", {"sigma_p", "sigma_r", "seed"});
    NoiseSpec spec;
    yaml::read(n, "sigma_p", "noise", spec.sigma_p);
    yaml::read(n, "sigma_r", "noise", spec.sigma_r);
    yaml::read(n, "seed", "noise", spec.seed);
    if (!(spec.sigma_p >= 0.0) || !(spec.sigma_r >= 0.0)) throw ConfigError("noise", "sigmas must be >= 0");
    s.noise = spec;
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("scenario", "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string scene_to_yaml(const Scene& scene) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << scene.seed;
  out << YAML::Key << "world" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "width"
      << YAML::Value << scene.world_width_m << YAML::Key << "height" << YAML::Value << scene.world_height_m
      << YAML::EndMap;
  out << YAML::Key << "agents" << YAML::Value << YAML::BeginSeq;
  for (const AgentState& a : scene.agents) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "id" << YAML::Value << a.id << YAML::Key << "x"
        << YAML::Value << a.pose.x << YAML::Key << "y" << YAML::Value << a.pose.y << YAML::Key << "yaw"
        << YAML::Value << a.pose.yaw << YAML::Key << "range" << YAML::Value << a.range_m << YAML::Key << "fov"
        << YAML::Value << a.fov_deg << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "boxes" << YAML::Value << YAML::BeginSeq;
  for (const Box3D& b : scene.boxes) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "id" << YAML::Value << b.object_id << YAML::Key << "x"
        << YAML::Value << b.x << YAML::Key << "y" << YAML::Value << b.y << YAML::Key << "z" << YAML::Value << b.z
        << YAML::Key << "length" << YAML::Value << b.length << YAML::Key << "width" << YAML::Value << b.width
        << YAML::Key << "height" << YAML::Value << b.height << YAML::Key << "yaw" << YAML::Value << b.yaw
        << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "walls" << YAML::Value << YAML::BeginSeq;
  for (const Wall& w : scene.walls) {
    out << YAML::Flow << YAML::BeginSeq << w.a.x() << w.a.y() << w.b.x() << w.b.y() << YAML::EndSeq;
  }
  out << YAML::EndSeq << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace copercept
