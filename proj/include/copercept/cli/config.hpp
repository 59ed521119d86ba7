#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "copercept/eval/experiment.hpp"

namespace copercept {

/// Everything a `run` or `sweep` needs. Relative scenario and weights paths resolve
/// against the config file's directory.
struct RunConfig {
  ExperimentConfig experiment;
  SweepSpec sweep;
  std::optional<std::filesystem::path> scenario_path;
  std::optional<std::filesystem::path> weights_path;
  std::optional<std::filesystem::path> output_dir;
  int jobs = 1;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

/// Parses run-config YAML. Referenced files are loaded (and must exist) here.
RunConfig parse_run_config(const std::string& yaml_text, const std::filesystem::path& base_dir = ".");
RunConfig load_run_config(const std::filesystem::path& path);

/// "100/50/25" or "100,50,25" -> {100, 50, 25}.
std::vector<int> parse_schedule(const std::string& text, const std::string& field);

/// Comma-separated list of numbers.
std::vector<double> parse_number_list(const std::string& text, const std::string& field);

/// Loads a scenario file into the experiment (explicit scene, generation parameters, noise, seed).
void apply_scenario(ExperimentConfig& cfg, const std::filesystem::path& path);

/// Loads a weight file into the experiment.
void apply_weights(ExperimentConfig& cfg, const std::filesystem::path& path);

}  // namespace copercept
