#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "copercept/collab/collab.hpp"
#include "copercept/comms/graph.hpp"
#include "copercept/comms/ledger.hpp"
#include "copercept/comms/message.hpp"
#include "copercept/core/pose.hpp"
#include "copercept/fusion/compress.hpp"
#include "copercept/fusion/fusion.hpp"

namespace copercept {

enum class HeatmapSource { kLearned, kOracle };

struct PipelineWeights {
  Stage1Weights stage1;
  CollabWeights collab;

  static PipelineWeights from(const WeightSet& w, const ModelDims& d);
};

struct ExchangeConfig {
  bool mix_enabled = true;  // false: no voxel priors are sent
  CompressionStrategy compression;
  CollabConfig collab;
  HeatmapSource heatmaps = HeatmapSource::kLearned;
  std::optional<std::size_t> budget_bytes;
  int hmf_window = 1;
  std::optional<std::uint64_t> shuffle_seed;  // permutes delivery order inside each round

  void validate() const;
};

/// Everything one agent brings to the exchange, in its own frame.
struct AgentInput {
  AgentId id = 0;
  Pose believed_pose;
  VoxelFeature lidar;
  VoxelFeature camera;
  std::optional<BevFeature> ideal_heat;  // needed for HeatmapSource::kOracle
};

struct AgentOutput {
  AgentId id = 0;
  BevFeature stage1;  // fused plane before instance exchange
  BevFeature fused;   // after completion, refinement and scale merge
};

/// What the budget allows: decided before any byte is sent, because every message size
/// except broadcasts is fixed by the configuration.
struct ExchangePlan {
  int k_ic = 0;
  bool heatmaps = true;
  bool broadcasts = true;
  std::set<std::pair<AgentId, AgentId>> voxel_links;  // (sender, receiver)
  std::optional<std::size_t> broadcast_allowance;      // bytes left for round 4, when capped
};

struct ExchangeResult {
  std::vector<AgentOutput> agents;  // ascending id
  CommLedger ledger;
  ExchangePlan plan;

  const AgentOutput& agent(AgentId id) const;
};

/// Bytes per message kind for a configuration, without running any pipeline. Under a budget
/// the broadcast figure is an upper bound (trimming depends on heat values).
struct BandwidthEstimate {
  std::size_t voxel_prior = 0;
  std::size_t heatmap = 0;
  std::size_t query = 0;
  std::size_t reply = 0;
  std::size_t broadcast = 0;
  ExchangePlan plan;

  std::size_t total() const { return voxel_prior + heatmap + query + reply + broadcast; }
};

BandwidthEstimate estimate_bandwidth(const WireSchema& schema, const ExchangeConfig& cfg, const CommGraph& graph);

/// Rounds: 1 voxel priors, 2 heatmaps, 3 queries and replies, 4 broadcasts. Every message is
/// encoded, charged to the ledger at its full length and decoded by its receiver.
ExchangeResult run_exchange(const std::vector<AgentInput>& agents, const CommGraph& graph, const ExchangeConfig& cfg,
                            const PipelineWeights& w);

}  // namespace copercept
