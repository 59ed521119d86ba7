#include "copercept/fusion/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "copercept/core/attention.hpp"
#include "copercept/core/collapse.hpp"
#include "copercept/core/error.hpp"

namespace copercept {

namespace {

float sigmoid(float x) {
  const float s = 1.0f / (1.0f + std::exp(-x));
  return std::clamp(s, std::numeric_limits<float>::min(), std::nextafter(1.0f, 0.0f));
}

CellMatrix<float> relu(CellMatrix<float> m) { return m.cwiseMax(0.0f); }

}  // namespace

VoxelFeature mix_voxel(const VoxelFeature& ego, const std::vector<VoxelFeature>& senders,
                       const AttentionProjections& proj) {
  const GridShape& s = ego.shape();
  const int c = s.channels;
  if (proj.query.rows() != c || proj.query.cols() != c || proj.key.rows() != c || proj.key.cols() != c ||
      proj.value.rows() != c || proj.value.cols() != c) {
    throw ShapeError("mix_voxel: projections must be " + std::to_string(c) + "x" + std::to_string(c));
  }
  std::vector<const VoxelFeature*> order;
  for (const VoxelFeature& v : senders) {
    if (!(v.shape() == s)) throw ShapeError("mix_voxel: sender grid " + v.shape().describe() + " != ego " + s.describe());
    order.push_back(&v);
  }
  std::sort(order.begin(), order.end(), [](const VoxelFeature* a, const VoxelFeature* b) { return a->frame() < b->frame(); });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (order[i]->frame() == order[i - 1]->frame()) {
      throw ParameterError("mix_voxel: duplicate sender frame " + std::to_string(order[i]->frame()));
    }
  }

  const CellMatrix<float> q = ego.cells() * proj.query.transpose();
  const CellMatrix<float> k_ego = ego.cells() * proj.key.transpose();
  const CellMatrix<float> v_ego = ego.cells() * proj.value.transpose();
  std::vector<CellMatrix<float>> k_snd, v_snd;
  for (const VoxelFeature* v : order) {
    k_snd.push_back(v->cells() * proj.key.transpose());
    v_snd.push_back(v->cells() * proj.value.transpose());
  }

  VoxelFeature out(s, ego.frame());
  const int max_nodes = 1 + static_cast<int>(order.size()) + 6;
  CellMatrix<float> keys(max_nodes, c), values(max_nodes, c);
  for (int h = 0; h < s.h_cells; ++h) {
    for (int w = 0; w < s.w_cells; ++w) {
      for (int l = 0; l < s.l_bins; ++l) {
        const Eigen::Index idx = ego.index(h, w, l);
        int n = 0;
        keys.row(n) = k_ego.row(idx);
        values.row(n++) = v_ego.row(idx);
        for (std::size_t i = 0; i < order.size(); ++i) {
          keys.row(n) = k_snd[i].row(idx);
          values.row(n++) = v_snd[i].row(idx);
        }
        const int nb[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
        for (const auto& d : nb) {
          const int hh = h + d[0], ww = w + d[1], ll = l + d[2];
          if (hh < 0 || hh >= s.h_cells || ww < 0 || ww >= s.w_cells || ll < 0 || ll >= s.l_bins) continue;
          const Eigen::Index j = ego.index(hh, ww, ll);
          keys.row(n) = k_ego.row(j);
          values.row(n++) = v_ego.row(j);
        }
        out.cells().row(idx) = attention(q.row(idx), keys.topRows(n), values.topRows(n)) + ego.cells().row(idx);
      }
    }
  }
  return out;
}

OccupancyGrid occupancy_head(const VoxelFeature& v_mix, const Linear& head) {
  if (head.out_features() != 1) throw ShapeError("occupancy head must map to one channel");
  CellMatrix<float> logits = head.apply(v_mix.cells());
  logits = logits.unaryExpr([](float x) { return sigmoid(x); });
  return OccupancyGrid(v_mix.shape().with_channels(1), std::move(logits), v_mix.frame());
}

VoxelFeature occ_gate(const VoxelFeature& v_img, const OccupancyGrid& occ, const VoxelFeature& v_mix,
                      const std::optional<Linear>& proj) {
  const GridShape& s = v_img.shape();
  if (!occ.shape().same_extent(s) || occ.shape().channels != 1) {
    throw ShapeError("occ_gate: occupancy " + occ.shape().describe() + " does not match image voxel " + s.describe());
  }
  if (!v_mix.shape().same_extent(s)) {
    throw ShapeError("occ_gate: prior " + v_mix.shape().describe() + " does not match image voxel " + s.describe());
  }
  CellMatrix<float> out = v_img.cells().array().colwise() * occ.cells().col(0).array();
  if (v_mix.shape().channels == s.channels) {
    out += v_mix.cells();
  } else {
    if (!proj) {
      throw ShapeError("occ_gate: prior has " + std::to_string(v_mix.shape().channels) + " channels, image voxel " +
                       std::to_string(s.channels) + ", and no projection was given");
    }
    out += proj->apply(v_mix.cells());
  }
  return VoxelFeature(s, std::move(out), v_img.frame());
}

HmfWeights HmfWeights::from(const WeightSet& w, const ModelDims& d) {
  HmfWeights h;
  h.expand_lidar = w.linear("hmf.expand_lidar", d.fused_channels, d.lidar_channels);
  h.expand_camera = w.linear("hmf.expand_camera", d.fused_channels, d.camera_channels);
  h.concat = w.linear("hmf.concat", d.fused_channels, 2 * d.fused_channels);
  for (int i = 0; i < d.mlp_layers; ++i) {
    h.mlp.push_back(w.linear("hmf.mlp." + std::to_string(i), d.fused_channels, d.fused_channels));
  }
  return h;
}

BevFeature hmf(const BevFeature& b_lidar, const BevFeature& b_img, const HmfWeights& w, int window) {
  if (b_lidar.height() != b_img.height() || b_lidar.width() != b_img.width()) {
    throw ShapeError("hmf: lidar plane " + b_lidar.shape().describe() + " and image plane " +
                     b_img.shape().describe() + " differ in H x W");
  }
  if (window < 1 || window % 2 == 0) throw ParameterError("hmf: window must be an odd number >= 1");
  const CellMatrix<float> lid = w.expand_lidar.apply(b_lidar.cells());
  const CellMatrix<float> img = w.expand_camera.apply(b_img.cells());
  const Eigen::Index c = lid.cols();
  if (img.cols() != c) throw ShapeError("hmf: expanded widths differ");

  CellMatrix<float> cat(lid.rows(), 2 * c);
  cat << lid, img;
  const CellMatrix<float> b_cat = w.concat.apply(cat);

  const int H = b_lidar.height(), W = b_lidar.width(), r = window / 2;
  CellMatrix<float> attn(lid.rows(), c);
  CellMatrix<float> keys(window * window, c);
  for (int h = 0; h < H; ++h) {
    for (int x = 0; x < W; ++x) {
      int n = 0;
      for (int dh = -r; dh <= r; ++dh) {
        for (int dw = -r; dw <= r; ++dw) {
          const int hh = h + dh, ww = x + dw;
          if (hh < 0 || hh >= H || ww < 0 || ww >= W) continue;
          keys.row(n++) = img.row(Eigen::Index(hh) * W + ww);
        }
      }
      const Eigen::Index i = Eigen::Index(h) * W + x;
      attn.row(i) = attention(lid.row(i), keys.topRows(n), keys.topRows(n));
    }
  }
  CellMatrix<float> m = attn;
  for (std::size_t i = 0; i < w.mlp.size(); ++i) {
    m = w.mlp[i].apply(m);
    if (i + 1 < w.mlp.size()) m = relu(std::move(m));
  }
  CellMatrix<float> out = b_cat + (m + lid);
  return BevFeature(b_lidar.shape().with_channels(static_cast<int>(c)), std::move(out), b_lidar.frame());
}

Stage1Weights Stage1Weights::from(const WeightSet& w, const ModelDims& d) {
  Stage1Weights s;
  s.collapse_lidar = w.linear("collapse.lidar", d.lidar_channels, d.lidar_channels);
  s.collapse_camera = w.linear("collapse.camera", d.camera_channels, d.camera_channels);
  s.mix = w.projections("mix", d.lidar_channels);
  s.occ = w.linear("occ", 1, d.lidar_channels);
  if (d.lidar_channels != d.camera_channels) s.gate = w.linear("gate.proj", d.camera_channels, d.lidar_channels);
  s.hmf = HmfWeights::from(w, d);
  return s;
}

Stage1Output fuse_stage1(const VoxelFeature& v_lidar, const VoxelFeature& v_img, const std::vector<VoxelFeature>& priors,
                         bool mix_enabled, const Stage1Weights& w, int hmf_window) {
  Stage1Output o;
  o.v_mix = mix_enabled ? mix_voxel(v_lidar, priors, w.mix) : v_lidar;
  o.occupancy = occupancy_head(o.v_mix, w.occ);
  o.v_img_gated = occ_gate(v_img, o.occupancy, o.v_mix, w.gate);
  o.b_lidar = collapse_to_bev(v_lidar, w.collapse_lidar);
  o.b_img = collapse_to_bev(o.v_img_gated, w.collapse_camera);
  o.fused = hmf(o.b_lidar, o.b_img, w.hmf, hmf_window);
  return o;
}

}  // namespace copercept
