#include "copercept/collab/collab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "copercept/core/attention.hpp"
#include "copercept/core/error.hpp"
#include "copercept/core/resample.hpp"

namespace copercept {

namespace {

float sigmoid(float x) {
  const float s = 1.0f / (1.0f + std::exp(-x));
  return std::clamp(s, std::numeric_limits<float>::min(), std::nextafter(1.0f, 0.0f));
}

void check_k(int k, Eigen::Index cells, const char* who) {
  if (k < 0 || k > cells) {
    throw ParameterError(std::string(who) + ": k = " + std::to_string(k) + " outside [0, " + std::to_string(cells) +
                         "]");
  }
}

// Row-major indices ordered by (key(value), index), first k only.
template <typename Key>
std::vector<Eigen::Index> top_k(const Heatmap& h, int k, Key key) {
  const auto& v = h.map.cells();
  std::vector<Eigen::Index> idx(v.rows());
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  auto less = [&](Eigen::Index a, Eigen::Index b) {
    const float ka = key(v(a, 0)), kb = key(v(b, 0));
    return ka < kb || (ka == kb && a < b);
  };
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), less);
  idx.resize(k);
  return idx;
}

CellMatrix<float> project(const CellMatrix<float>& x, const CellMatrix<float>& w) { return x * w.transpose(); }

}  // namespace

Heatmap Heatmap::from(BevFeature plane, int scale) {
  if (plane.channels() != 1) throw ShapeError("heatmap plane must have one channel");
  return Heatmap{std::move(plane), scale};
}

HeatmapHeadWeights HeatmapHeadWeights::from(const WeightSet& w, const ModelDims& d) {
  const int c = d.fused_channels, hid = d.heatmap_hidden();
  return {w.matrix("hm.conv1.weight", hid, c * 9), w.vector("hm.conv1.bias", hid),
          w.matrix("hm.conv2.weight", 1, hid * 9), w.vector("hm.conv2.bias", 1)};
}

CellMatrix<float> conv3x3(const BevFeature& in, const CellMatrix<float>& weight, const RowVector<float>& bias) {
  const int cin = in.channels(), H = in.height(), W = in.width();
  const auto cout = weight.rows();
  if (weight.cols() != Eigen::Index(cin) * 9 || bias.size() != cout) {
    throw ShapeError("conv3x3: weight " + std::to_string(weight.rows()) + "x" + std::to_string(weight.cols()) +
                     " does not fit " + std::to_string(cin) + " input channels");
  }
  CellMatrix<float> out(in.cells().rows(), cout);
  out.rowwise() = bias;
  CellMatrix<float> shifted(in.cells().rows(), cin);
  CellMatrix<float> wk(cout, cin);
  for (int ky = 0; ky < 3; ++ky) {
    for (int kx = 0; kx < 3; ++kx) {
      for (int i = 0; i < cin; ++i) wk.col(i) = weight.col(i * 9 + ky * 3 + kx);
      if (wk.isZero(0.0f)) continue;
      shifted.setZero();
      for (int h = 0; h < H; ++h) {
        const int sh = h + ky - 1;
        if (sh < 0 || sh >= H) continue;
        for (int w = 0; w < W; ++w) {
          const int sw = w + kx - 1;
          if (sw < 0 || sw >= W) continue;
          shifted.row(in.index(h, w)) = in.cells().row(in.index(sh, sw));
        }
      }
      out.noalias() += shifted * wk.transpose();
    }
  }
  return out;
}

Heatmap heatmap_head(const BevFeature& b, const HeatmapHeadWeights& w, int scale) {
  const CellMatrix<float> hidden = conv3x3(b, w.conv1, w.bias1);
  const BevFeature mid(b.shape().with_channels(static_cast<int>(hidden.cols())), hidden, b.frame());
  CellMatrix<float> logits = conv3x3(mid, w.conv2, w.bias2);
  if (logits.cols() != 1) throw ShapeError("heatmap head must end in one channel");
  logits = logits.unaryExpr([](float x) { return sigmoid(x); });
  return Heatmap{BevFeature(b.shape().with_channels(1), std::move(logits), b.frame()), scale};
}

Heatmap proxy_heatmap(const BevFeature& b, int scale) {
  CellMatrix<float> m = b.cells().rowwise().maxCoeff();
  m = m.unaryExpr([](float x) { return sigmoid(x); });
  return Heatmap{BevFeature(b.shape().with_channels(1), std::move(m), b.frame()), scale};
}

BevFeature center_channels(const BevFeature& b) {
  BevFeature out = b;
  const Eigen::Index n = b.cells().rows();
  std::vector<float> col(n);
  for (Eigen::Index c = 0; c < b.cells().cols(); ++c) {
    for (Eigen::Index i = 0; i < n; ++i) col[i] = b.cells()(i, c);
    const auto mid = col.begin() + n / 2;
    std::nth_element(col.begin(), mid, col.end());
    float median = *mid;
    if (n % 2 == 0) median = 0.5f * (median + *std::max_element(col.begin(), mid));
    out.cells().col(c).array() -= median;
  }
  return out;
}

Heatmap detection_heatmap(const BevFeature& b, const HeatmapHeadWeights& w, int scale) {
  return heatmap_head(center_channels(b), w, scale);
}

Heatmap discrepancy(const Heatmap& h_rc, const Heatmap& h_sd) {
  if (h_rc.height() != h_sd.height() || h_rc.width() != h_sd.width() || h_rc.scale != h_sd.scale) {
    throw ShapeError("discrepancy: heatmaps differ in shape or scale");
  }
  BevFeature d = h_rc.map;
  d.cells() -= h_sd.map.cells();
  return Heatmap{std::move(d), h_rc.scale};
}

std::vector<Cell> select_k_min(const Heatmap& h, int k) {
  check_k(k, h.map.cells().rows(), "select_k_min");
  std::vector<Cell> out;
  for (Eigen::Index i : top_k(h, k, [](float v) { return v; })) {
    out.push_back({static_cast<int>(i / h.width()), static_cast<int>(i % h.width())});
  }
  return out;
}

std::vector<InstanceVector> select_k_max(const Heatmap& h, const BevFeature& b, int k) {
  if (b.height() != h.height() || b.width() != h.width()) throw ShapeError("select_k_max: heatmap and plane differ");
  check_k(k, h.map.cells().rows(), "select_k_max");
  std::vector<InstanceVector> out;
  for (Eigen::Index i : top_k(h, k, [](float v) { return -v; })) {
    out.push_back({{static_cast<int>(i / h.width()), static_cast<int>(i % h.width())},
                   b.cells().row(i),
                   h.map.cells()(i, 0),
                   h.scale,
                   b.frame()});
  }
  return out;
}

std::vector<InstanceVector> gather_instances(const BevFeature& b, const Heatmap& h, const std::vector<Cell>& positions) {
  std::vector<InstanceVector> out;
  for (const Cell& c : positions) {
    if (c.h < 0 || c.h >= b.height() || c.w < 0 || c.w >= b.width()) {
      throw ProtocolError("query position (" + std::to_string(c.h) + ", " + std::to_string(c.w) +
                          ") outside the grid of agent " + std::to_string(b.frame()));
    }
    out.push_back({c, b.cell(c.h, c.w), h(c.h, c.w), h.scale, b.frame()});
  }
  return out;
}

BevFeature instance_complete(const BevFeature& b_rc, const std::vector<SenderInstances>& per_sender,
                             const AttentionProjections& proj) {
  std::vector<const SenderInstances*> order;
  for (const SenderInstances& s : per_sender) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(),
                   [](const SenderInstances* a, const SenderInstances* b) { return a->sender < b->sender; });

  BevFeature out = b_rc;
  std::vector<char> touched(b_rc.cells().rows(), 0);
  for (const SenderInstances* s : order) {
    for (const InstanceVector& inst : s->instances) {
      const Cell& p = inst.position;
      if (p.h < 0 || p.h >= b_rc.height() || p.w < 0 || p.w >= b_rc.width()) {
        throw ProtocolError("sender " + std::to_string(s->sender) + " sent position (" + std::to_string(p.h) + ", " +
                            std::to_string(p.w) + ") outside the receiver grid");
      }
      if (inst.feature.size() != b_rc.channels()) {
        throw ShapeError("sender " + std::to_string(s->sender) + " sent a feature of width " +
                         std::to_string(inst.feature.size()) + ", receiver has " + std::to_string(b_rc.channels()));
      }
      const Eigen::Index i = b_rc.index(p.h, p.w);
      const RowVector<float> q = b_rc.cells().row(i) * proj.query.transpose();
      const RowVector<float> k = inst.feature * proj.key.transpose();
      const RowVector<float> v = inst.feature * proj.value.transpose();
      const CellMatrix<float> cand = attention(q, k, v);
      if (touched[i]) {
        out.cells().row(i) += cand;
      } else {
        out.cells().row(i) = cand;
        touched[i] = 1;
      }
    }
  }
  return out;
}

RowVector<float> positional_encoding(int h, int w, int channels) {
  RowVector<float> pe(channels);
  const int half = channels / 2;
  auto encode = [&](double pos, int offset, int dims) {
    for (int i = 0; i < dims; ++i) {
      const double freq = std::pow(10000.0, -2.0 * (i / 2) / std::max(dims, 1));
      pe(offset + i) = static_cast<float>(i % 2 == 0 ? std::sin(pos * freq) : std::cos(pos * freq));
    }
  };
  encode(h, 0, half);
  encode(w, half, channels - half);
  return pe;
}

BevFeature instance_refine(const BevFeature& b_rc, const std::vector<InstanceVector>& instances,
                           const RefineWeights& w, bool pos_encoding) {
  if (instances.empty()) return b_rc;
  const int c = b_rc.channels();
  CellMatrix<float> f(static_cast<Eigen::Index>(instances.size()), c);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const InstanceVector& inst = instances[i];
    if (inst.feature.size() != c) {
      throw ShapeError("instance_refine: instance width " + std::to_string(inst.feature.size()) + " != " +
                       std::to_string(c));
    }
    f.row(i) = inst.feature;
    if (pos_encoding) f.row(i) += positional_encoding(inst.position.h, inst.position.w, c);
  }
  const CellMatrix<float> f2 =
      attention(project(f, w.self.query), project(f, w.self.key), project(f, w.self.value));
  CellMatrix<float> out = attention(project(b_rc.cells(), w.cross.query), project(f2, w.cross.key),
                                    project(f2, w.cross.value));
  out += b_rc.cells();
  return BevFeature(b_rc.shape(), std::move(out), b_rc.frame());
}

CollabWeights CollabWeights::from(const WeightSet& w, const ModelDims& d) {
  const int c = d.fused_channels;
  return {HeatmapHeadWeights::from(w, d), w.projections("ic", c), {w.projections("ir.self", c), w.projections("ir.cross", c)}};
}

void CollabConfig::validate() const {
  if (scales < 1 || scales > 4) throw ParameterError("collab.scales must be in [1, 4]");
  if (k_ic < 0) throw ParameterError("collab.k_ic must be >= 0");
  if (static_cast<int>(k_ir.size()) != scales) {
    throw ParameterError("collab.k_ir needs one entry per scale (" + std::to_string(scales) + ")");
  }
  for (int k : k_ir) {
    if (k < 0) throw ParameterError("collab.k_ir entries must be >= 0");
  }
}

ScalePyramid ScalePyramid::build(const BevFeature& b, int scales) {
  ScalePyramid p;
  p.levels.push_back(b);
  for (int s = 1; s < scales; ++s) p.levels.push_back(downsample2(p.levels.back()));
  return p;
}

std::vector<Heatmap> heatmap_pyramid(const Heatmap& h0, int scales) {
  std::vector<Heatmap> out{h0};
  for (int s = 1; s < scales; ++s) out.push_back(Heatmap{downsample2(out.back().map), s});
  return out;
}

BevFeature collaborate_scale(const BevFeature& b_rc, const Heatmap& h_rc, const std::vector<SenderInstances>& replies,
                             const std::vector<SenderInstances>& broadcasts, int k_ir, const CollabWeights& w,
                             bool pos_encoding) {
  return refine_scale(instance_complete(b_rc, replies, w.ic), h_rc, broadcasts, k_ir, w, pos_encoding);
}

BevFeature refine_scale(const BevFeature& completed, const Heatmap& h_rc, const std::vector<SenderInstances>& broadcasts,
                        int k_ir, const CollabWeights& w, bool pos_encoding) {
  std::vector<InstanceVector> all = select_k_max(h_rc, completed, std::min<int>(k_ir, completed.cells().rows()));
  for (std::size_t i = 1; i < broadcasts.size(); ++i) {
    if (broadcasts[i].sender <= broadcasts[i - 1].sender) {
      throw ProtocolError("broadcasts must be ordered by ascending sender id");
    }
  }
  for (const SenderInstances& s : broadcasts) all.insert(all.end(), s.instances.begin(), s.instances.end());
  return instance_refine(completed, all, w.ir, pos_encoding);
}

BevFeature merge_scales(const std::vector<BevFeature>& levels) {
  if (levels.empty()) throw ShapeError("merge_scales: no levels");
  BevFeature out = levels.front();
  for (std::size_t s = 1; s < levels.size(); ++s) {
    out.cells() += resize_bilinear(levels[s], out.height(), out.width()).cells();
  }
  return out;
}

BevFeature collaborate_multiscale(const ScalePyramid& receiver, const std::vector<Heatmap>& receiver_heat,
                                  const std::vector<SenderView>& senders, const CollabConfig& cfg,
                                  const CollabWeights& w) {
  cfg.validate();
  if (static_cast<int>(receiver.levels.size()) != cfg.scales || static_cast<int>(receiver_heat.size()) != cfg.scales) {
    throw ShapeError("collaborate_multiscale: receiver pyramid does not have " + std::to_string(cfg.scales) + " levels");
  }
  std::vector<const SenderView*> order;
  for (const SenderView& s : senders) {
    if (static_cast<int>(s.levels.size()) != cfg.scales || static_cast<int>(s.heatmaps.size()) != cfg.scales) {
      throw ShapeError("sender " + std::to_string(s.id) + " pyramid does not have " + std::to_string(cfg.scales) +
                       " levels");
    }
    for (int l = 0; l < cfg.scales; ++l) {
      if (s.levels[l].height() != receiver.levels[l].height() || s.levels[l].width() != receiver.levels[l].width()) {
        throw ShapeError("sender " + std::to_string(s.id) + " grid differs from the receiver grid");
      }
    }
    order.push_back(&s);
  }
  std::sort(order.begin(), order.end(), [](const SenderView* a, const SenderView* b) { return a->id < b->id; });

  std::vector<BevFeature> refined;
  for (int l = 0; l < cfg.scales; ++l) {
    const BevFeature& b = receiver.levels[l];
    const Heatmap& h = receiver_heat[l];
    const int k_ic = std::min<int>(cfg.k_ic, b.cells().rows());
    std::vector<SenderInstances> replies, broadcasts;
    for (const SenderView* s : order) {
      const std::vector<Cell> query = select_k_min(discrepancy(h, s->heatmaps[l]), k_ic);
      replies.push_back({s->id, gather_instances(s->levels[l], s->heatmaps[l], query)});
      if (l < static_cast<int>(s->broadcast.size()) && !s->broadcast[l].empty()) {
        broadcasts.push_back({s->id, s->broadcast[l]});
      }
    }
    refined.push_back(collaborate_scale(b, h, replies, broadcasts, cfg.k_ir[l], w, cfg.pos_encoding));
  }
  return merge_scales(refined);
}

}  // namespace copercept
