#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "copercept/sim/noise.hpp"
#include "copercept/sim/scene.hpp"

namespace copercept {

/// Contents of a scenario file: an explicit scene, generation parameters, or both
/// (the explicit scene wins), plus optional noise and seed overrides.
struct Scenario {
  std::optional<Scene> scene;
  SceneParams params;
  std::optional<NoiseSpec> noise;
  std::optional<std::uint64_t> seed;
};

/// Parses scenario YAML; errors are ConfigError naming the offending key.
Scenario parse_scenario(const std::string& yaml_text);
Scenario load_scenario(const std::filesystem::path& path);

/// Scene as scenario YAML (explicit boxes, walls and agents).
std::string scene_to_yaml(const Scene& scene);

}  // namespace copercept
