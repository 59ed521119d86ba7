#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "copercept/comms/exchange.hpp"
#include "copercept/core/weights.hpp"
#include "copercept/eval/detection.hpp"
#include "copercept/sim/noise.hpp"
#include "copercept/sim/scene.hpp"

namespace copercept {

inline constexpr double kIouThresholds[3] = {0.3, 0.5, 0.7};

/// One fully specified pipeline configuration; the seed list is shared by every grid point.
struct ExperimentConfig {
  std::optional<Scene> scene;  // fixed scene; otherwise generated from scene_params per seed
  SceneParams scene_params;
  std::vector<std::uint64_t> seeds{0};
  GridShape grid{64, 64, 8, 16, 1.0, 0.5};
  int mlp_layers = 1;
  int hmf_window = 1;
  std::optional<WeightSet> weights;  // defaults(dims) when absent

  int agents = 2;                 // the first `agents` agents of the scene take part
  std::string strategy = "m1";    // m1, m2, m3, none, or off (no voxel priors)
  CollabConfig collab;
  HeatmapSource heatmaps = HeatmapSource::kLearned;
  std::optional<std::size_t> budget_bytes;
  std::optional<double> comm_range_m;
  NoiseSpec noise;  // seed is mixed with the scene seed per run
  DecodeOptions decode;
  std::optional<std::uint64_t> shuffle_seed;

  ModelDims dims() const { return {grid.channels, grid.channels, grid.channels, mlp_layers}; }
  ExchangeConfig exchange_config() const;
  void validate() const;
};

/// Axes of a sweep; empty axes keep the base value. Points are the cartesian product
/// in the order agents, noise, strategy, k_ic, k_ir. A noise value v sets sigma_p = v metres
/// and sigma_r = v degrees.
struct SweepSpec {
  std::vector<int> agents;
  std::vector<double> noise;
  std::vector<std::string> strategy;
  std::vector<int> k_ic;
  std::vector<std::vector<int>> k_ir;

  bool empty() const;
  std::vector<ExperimentConfig> expand(const ExperimentConfig& base) const;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<BevBox> ground_truth;  // ego frame
  std::vector<Detection> detections;
  double ap[3] = {0.0, 0.0, 0.0};
  CommLedger ledger;
  std::vector<int> occluded;  // ground-truth indices hidden from the ego, seen by a taking-part sender
  double occluded_recall = 1.0;  // at IoU 0.3
};

struct PointResult {
  ExperimentConfig config;
  std::vector<SeedResult> runs;

  double mean_ap(int which) const;
  double mean_bytes() const;
};

struct EvalReport {
  std::vector<PointResult> points;

  /// One row per grid point.
  std::string csv() const;
  /// One row per (point, seed).
  std::string runs_csv() const;
  std::string summary() const;
  std::string ledger_tsv() const;
  std::string drops_tsv() const;
  std::string ground_truth_csv() const;
  std::string detections_csv() const;
};

/// Builds every agent's encodings for one scene. Believed poses carry the configured noise.
std::vector<AgentInput> encode_agents(const Scene& scene, const ExperimentConfig& cfg, const PipelineWeights& w,
                                      std::uint64_t seed);

/// Scene used for `seed`: the fixed scene, or a generated one.
Scene scene_for(const ExperimentConfig& cfg, std::uint64_t seed);

/// Boxes whose centre falls inside the ego grid, in the ego frame.
std::vector<BevBox> ground_truth(const Scene& scene, const GridShape& grid);

/// Per-kind bytes of one exchange without simulating. Agents are linked completely unless a
/// fixed scene and a range are both given.
BandwidthEstimate estimate_bandwidth(const ExperimentConfig& cfg);

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed);

/// Every grid point over every seed; tasks run on up to `jobs` threads, results in grid order.
EvalReport run_experiment(const ExperimentConfig& base, const SweepSpec& sweep = {}, int jobs = 1);

}  // namespace copercept
