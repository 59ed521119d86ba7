#pragma once

#include <vector>

#include "copercept/core/grid.hpp"
#include "copercept/core/weights.hpp"

namespace copercept {

/// Per-cell object confidence; one channel, owner = map.frame().
struct Heatmap {
  BevFeature map;
  int scale = 0;

  int height() const { return map.height(); }
  int width() const { return map.width(); }
  AgentId owner() const { return map.frame(); }
  float operator()(int h, int w) const { return map(h, w, 0); }

  static Heatmap from(BevFeature plane, int scale);
};

struct Cell {
  int h = 0;
  int w = 0;

  bool operator==(const Cell&) const = default;
};

/// One grid cell's feature, shared sparsely between agents.
struct InstanceVector {
  Cell position;
  RowVector<float> feature;
  float heat = 0.0f;
  int scale = 0;
  AgentId owner = 0;
};

/// Instances contributed by one sender.
struct SenderInstances {
  AgentId sender = 0;
  std::vector<InstanceVector> instances;
};

struct HeatmapHeadWeights {
  CellMatrix<float> conv1;  // hidden x (C * 9), laid out [out][in][ky][kx]
  RowVector<float> bias1;
  CellMatrix<float> conv2;  // 1 x (hidden * 9)
  RowVector<float> bias2;

  static HeatmapHeadWeights from(const WeightSet& w, const ModelDims& d);
};

/// 3x3 convolution with zero "same" padding; `weight` is out x (in * 9).
CellMatrix<float> conv3x3(const BevFeature& in, const CellMatrix<float>& weight, const RowVector<float>& bias);

/// conv3x3 (C -> C/2) then conv3x3 (C/2 -> 1), then sigmoid.
Heatmap heatmap_head(const BevFeature& b, const HeatmapHeadWeights& w, int scale = 0);

/// sigmoid(max over channels); a weight-free stand-in for the learned head.
Heatmap proxy_heatmap(const BevFeature& b, int scale = 0);

/// Subtracts each channel's median over all cells.
BevFeature center_channels(const BevFeature& b);

/// heatmap_head applied to the median-centred plane; used wherever detections are read out.
Heatmap detection_heatmap(const BevFeature& b, const HeatmapHeadWeights& w, int scale = 0);

/// h_rc - h_sd, elementwise.
Heatmap discrepancy(const Heatmap& h_rc, const Heatmap& h_sd);

/// k cells of smallest value, ordered by (value, row-major index).
std::vector<Cell> select_k_min(const Heatmap& h, int k);

/// k cells of largest heat, ordered by (-value, row-major index), with their features.
std::vector<InstanceVector> select_k_max(const Heatmap& h, const BevFeature& b, int k);

/// Instances at `positions` read from a plane and heatmap already in the receiver's frame.
std::vector<InstanceVector> gather_instances(const BevFeature& b, const Heatmap& h, const std::vector<Cell>& positions);

/// Replaces each requested cell with the sum over senders (ascending id) of
/// attention(q = receiver cell, k = v = sender instance). Other cells are untouched.
BevFeature instance_complete(const BevFeature& b_rc, const std::vector<SenderInstances>& per_sender,
                             const AttentionProjections& proj);

/// 2D sinusoidal code: the first C/2 channels encode h, the rest encode w.
RowVector<float> positional_encoding(int h, int w, int channels);

struct RefineWeights {
  AttentionProjections self;
  AttentionProjections cross;
};

/// F = instance features (+ positional code); F' = self-attention(F);
/// out = cross-attention(q = b_rc cells, k = v = F') + b_rc. Identity for no instances.
BevFeature instance_refine(const BevFeature& b_rc, const std::vector<InstanceVector>& instances,
                           const RefineWeights& w, bool pos_encoding = true);

struct CollabWeights {
  HeatmapHeadWeights head;
  AttentionProjections ic;
  RefineWeights ir;

  static CollabWeights from(const WeightSet& w, const ModelDims& d);
};

struct CollabConfig {
  int k_ic = 20;
  std::vector<int> k_ir{100, 50, 25};
  int scales = 3;
  bool pos_encoding = true;

  void validate() const;
};

/// Feature planes at factors 1, 1/2, 1/4, ... (2x2 mean pooling, ceil dims).
struct ScalePyramid {
  std::vector<BevFeature> levels;

  static ScalePyramid build(const BevFeature& b, int scales);
};

/// Mean-pooled copies of a scale-0 heatmap for every pyramid level.
std::vector<Heatmap> heatmap_pyramid(const Heatmap& h0, int scales);

/// Completion then refinement at one scale. `broadcasts` must be ordered by sender id.
BevFeature collaborate_scale(const BevFeature& b_rc, const Heatmap& h_rc, const std::vector<SenderInstances>& replies,
                             const std::vector<SenderInstances>& broadcasts, int k_ir, const CollabWeights& w,
                             bool pos_encoding);

/// Refinement half of collaborate_scale: the receiver's own top-k_ir instances of `completed`
/// plus every broadcast instance, fed to instance_refine.
BevFeature refine_scale(const BevFeature& completed, const Heatmap& h_rc, const std::vector<SenderInstances>& broadcasts,
                        int k_ir, const CollabWeights& w, bool pos_encoding);

/// Bilinear upsample of every level to scale-0 size, summed in scale order.
BevFeature merge_scales(const std::vector<BevFeature>& levels);

/// What one sender offers a receiver, already expressed in the receiver's frame.
struct SenderView {
  AgentId id = 0;
  std::vector<BevFeature> levels;
  std::vector<Heatmap> heatmaps;
  std::vector<std::vector<InstanceVector>> broadcast;  // per scale
};

/// Full stage-2 collaboration for one receiver without a wire in between.
BevFeature collaborate_multiscale(const ScalePyramid& receiver, const std::vector<Heatmap>& receiver_heat,
                                  const std::vector<SenderView>& senders, const CollabConfig& cfg,
                                  const CollabWeights& w);

}  // namespace copercept
