#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "copercept/collab/collab.hpp"
#include "copercept/core/resample.hpp"

using namespace copercept;

namespace {

Heatmap heat(int h, int w, std::vector<float> values, int scale = 0, AgentId owner = 0) {
  BevFeature m(GridShape{h, w, 1, 1, 1.0, 1.0}, owner);
  for (int i = 0; i < h * w; ++i) m.cells()(i, 0) = values[i];
  return Heatmap{m, scale};
}

Heatmap random_heat(int h, int w, std::mt19937& rng, int levels = 0) {
  std::vector<float> v(h * w);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::uniform_int_distribution<int> q(0, levels);
  for (float& x : v) x = levels > 0 ? float(q(rng)) / levels : u(rng);
  return heat(h, w, v);
}

BevFeature random_plane(int h, int w, int c, unsigned seed, AgentId frame = 0) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> n01;
  BevFeature b(GridShape{h, w, 1, c, 1.0, 1.0}, frame);
  for (Eigen::Index i = 0; i < b.cells().size(); ++i) b.cells().data()[i] = n01(rng);
  return b;
}

std::vector<int> stable_order(const Heatmap& h, bool ascending) {
  std::vector<int> idx(h.height() * h.width());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    const float va = h.map.cells()(a, 0), vb = h.map.cells()(b, 0);
    return ascending ? va < vb : va > vb;
  });
  return idx;
}

RefineWeights identity_refine(int c) { return {AttentionProjections::identity(c), AttentionProjections::identity(c)}; }

// Two-stage attention written as explicit loops in double.
std::vector<std::vector<double>> brute_attend(const std::vector<std::vector<double>>& q,
                                              const std::vector<std::vector<double>>& kv) {
  const std::size_t c = q[0].size();
  std::vector<std::vector<double>> out(q.size(), std::vector<double>(c, 0.0));
  for (std::size_t i = 0; i < q.size(); ++i) {
    std::vector<double> e(kv.size());
    double peak = -1e300, total = 0.0;
    for (std::size_t j = 0; j < kv.size(); ++j) {
      double d = 0.0;
      for (std::size_t x = 0; x < c; ++x) d += q[i][x] * kv[j][x];
      e[j] = d / std::sqrt(double(c));
      peak = std::max(peak, e[j]);
    }
    for (double& x : e) total += (x = std::exp(x - peak));
    for (std::size_t j = 0; j < kv.size(); ++j)
      for (std::size_t x = 0; x < c; ++x) out[i][x] += e[j] / total * kv[j][x];
  }
  return out;
}

}  // namespace

TEST(HeatmapHead, ZeroInputGivesSigmoidOfBias) {
  ModelDims d{16, 16, 16, 1};
  HeatmapHeadWeights w = HeatmapHeadWeights::from(WeightSet::defaults(d), d);
  BevFeature b(GridShape{5, 7, 1, 16, 1.0, 1.0});
  Heatmap h = heatmap_head(b, w);
  EXPECT_EQ(h.height(), 5);
  EXPECT_EQ(h.width(), 7);
  EXPECT_EQ(h.map.channels(), 1);
  const float expect = 1.0f / (1.0f + std::exp(-w.bias2[0]));
  EXPECT_TRUE((h.map.cells().array() == expect).all());
}

TEST(HeatmapHead, ShapeContractForAnyChannels) {
  for (int c : {1, 3, 8}) {
    ModelDims d{c, c, c, 1};
    HeatmapHeadWeights w = HeatmapHeadWeights::from(WeightSet::defaults(d), d);
    Heatmap h = heatmap_head(random_plane(4, 6, c, 1), w);
    EXPECT_EQ(h.map.channels(), 1);
    EXPECT_TRUE((h.map.cells().array() > 0.0f).all() && (h.map.cells().array() < 1.0f).all());
  }
  ModelDims d{4, 4, 4, 1};
  EXPECT_THROW(heatmap_head(random_plane(3, 3, 5, 1), HeatmapHeadWeights::from(WeightSet::defaults(d), d)), ShapeError);
}

TEST(HeatmapHead, ConvMatchesDirectSum) {
  BevFeature b = random_plane(4, 5, 2, 7);
  CellMatrix<float> wt = CellMatrix<float>::Random(3, 18);
  RowVector<float> bias = RowVector<float>::Random(3);
  CellMatrix<float> out = conv3x3(b, wt, bias);
  for (int h = 0; h < 4; ++h)
    for (int w = 0; w < 5; ++w)
      for (int o = 0; o < 3; ++o) {
        double acc = bias(o);
        for (int i = 0; i < 2; ++i)
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int sh = h + ky - 1, sw = w + kx - 1;
              if (sh < 0 || sh > 3 || sw < 0 || sw > 4) continue;
              acc += double(wt(o, i * 9 + ky * 3 + kx)) * b(sh, sw, i);
            }
        EXPECT_NEAR(out(b.index(h, w), o), acc, 1e-5);
      }
}

TEST(HeatmapHead, ProxyOnOneHotOccupancy) {
  BevFeature b(GridShape{3, 3, 1, 4, 1.0, 1.0});
  b(1, 1, 0) = 1.0f;
  Heatmap h = proxy_heatmap(b);
  EXPECT_GT(h(1, 1), 0.7f);
  EXPECT_EQ(h(0, 0), 0.5f);
}

TEST(HeatmapHead, MeanFilterPeaksAtBlobCentre) {
  ModelDims d{4, 4, 4, 1};
  HeatmapHeadWeights w = HeatmapHeadWeights::from(WeightSet::defaults(d), d);
  BevFeature b(GridShape{9, 9, 1, 4, 1.0, 1.0});
  for (int h = 3; h <= 5; ++h)
    for (int x = 2; x <= 6; ++x) b(h, x, 0) = 3.0f;
  Heatmap hm = heatmap_head(b, w);
  Eigen::Index best;
  hm.map.cells().col(0).maxCoeff(&best);
  EXPECT_EQ(best, b.index(4, 4));
}

TEST(Discrepancy, ArithmeticAndAntisymmetry) {
  Heatmap a = heat(1, 2, {0.1f, 0.4f}), b = heat(1, 2, {0.9f, 0.4f});
  Heatmap d = discrepancy(a, b);
  EXPECT_FLOAT_EQ(d(0, 0), -0.8f);
  EXPECT_EQ(d(0, 1), 0.0f);
  Heatmap r = discrepancy(b, a);
  EXPECT_TRUE((r.map.cells().array() == -d.map.cells().array()).all());
  EXPECT_TRUE(discrepancy(a, a).map.cells().isZero(0.0f));
  EXPECT_THROW(discrepancy(a, heat(2, 1, {0, 0})), ShapeError);
  EXPECT_THROW(discrepancy(a, heat(1, 2, {0, 0}, 1)), ShapeError);
}

TEST(TopK, TieBreakIsRowMajor) {
  Heatmap flat = heat(2, 3, std::vector<float>(6, 0.5f));
  auto mins = select_k_min(flat, 3);
  EXPECT_EQ(mins, (std::vector<Cell>{{0, 0}, {0, 1}, {0, 2}}));
  BevFeature b = random_plane(2, 3, 2, 1);
  auto maxs = select_k_max(flat, b, 2);
  ASSERT_EQ(maxs.size(), 2u);
  EXPECT_EQ(maxs[0].position, (Cell{0, 0}));
  EXPECT_EQ(maxs[1].position, (Cell{0, 1}));
  EXPECT_TRUE(maxs[1].feature.isApprox(b.cell(0, 1)));
}

TEST(TopK, SingleExtremes) {
  std::vector<float> v(9, 0.0f);
  v[5] = -1.0f;
  EXPECT_EQ(select_k_min(heat(3, 3, v), 1), (std::vector<Cell>{{1, 2}}));
  v[5] = 0.0f;
  v[7] = 1.0f;
  auto m = select_k_max(heat(3, 3, v), random_plane(3, 3, 1, 2), 1);
  EXPECT_EQ(m[0].position, (Cell{2, 1}));
  EXPECT_EQ(m[0].heat, 1.0f);
}

TEST(TopK, MatchesFullSortOracle) {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    Heatmap h = random_heat(16, 16, rng, trial % 2 ? 4 : 0);
    BevFeature b = random_plane(16, 16, 2, trial);
    const auto asc = stable_order(h, true), desc = stable_order(h, false);
    for (int k : {0, 1, 20, 256}) {
      auto mins = select_k_min(h, k);
      auto maxs = select_k_max(h, b, k);
      for (int i = 0; i < k; ++i) {
        EXPECT_EQ(mins[i].h * 16 + mins[i].w, asc[i]);
        EXPECT_EQ(maxs[i].position.h * 16 + maxs[i].position.w, desc[i]);
      }
    }
  }
  EXPECT_THROW(select_k_min(heat(2, 2, {0, 0, 0, 0}), 5), ParameterError);
  EXPECT_THROW(select_k_max(heat(2, 2, {0, 0, 0, 0}), random_plane(2, 2, 1, 1), 5), ParameterError);
}

TEST(InstanceComplete, SingleSenderCopiesFeatures) {
  BevFeature rc = random_plane(4, 4, 3, 1);
  BevFeature sd = random_plane(4, 4, 3, 2, 1);
  Heatmap hs = heat(4, 4, std::vector<float>(16, 0.3f));
  std::vector<Cell> pos = {{0, 1}, {3, 3}};
  BevFeature out = instance_complete(rc, {{1, gather_instances(sd, hs, pos)}}, AttentionProjections::identity(3));
  for (int h = 0; h < 4; ++h)
    for (int w = 0; w < 4; ++w) {
      const bool sel = (h == 0 && w == 1) || (h == 3 && w == 3);
      EXPECT_TRUE(bit_equal(out.cell(h, w), sel ? sd.cell(h, w) : rc.cell(h, w))) << h << "," << w;
    }
}

TEST(InstanceComplete, TwoSendersSum) {
  BevFeature rc = random_plane(2, 2, 2, 3);
  RowVector<float> u(2), v(2);
  u << 1.0f, 2.0f;
  v << -0.5f, 4.0f;
  SenderInstances a{2, {{{1, 0}, u, 0.5f, 0, 2}}}, b{1, {{{1, 0}, v, 0.5f, 0, 1}}};
  BevFeature out = instance_complete(rc, {a, b}, AttentionProjections::identity(2));
  EXPECT_TRUE(out.cell(1, 0).isApprox(u + v));
  BevFeature swapped = instance_complete(rc, {b, a}, AttentionProjections::identity(2));
  EXPECT_TRUE(bit_equal(out, swapped));
}

TEST(InstanceComplete, NoPositionsIsIdentityAndBadPositionNamesSender) {
  BevFeature rc = random_plane(3, 3, 2, 4);
  EXPECT_TRUE(bit_equal(instance_complete(rc, {{5, {}}}, AttentionProjections::identity(2)), rc));
  SenderInstances bad{7, {{{3, 0}, RowVector<float>::Zero(2), 0.0f, 0, 7}}};
  try {
    instance_complete(rc, {bad}, AttentionProjections::identity(2));
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("sender 7"), std::string::npos);
  }
}

TEST(InstanceComplete, ValueProjectionApplies) {
  BevFeature rc = random_plane(2, 2, 2, 5);
  AttentionProjections p = AttentionProjections::identity(2);
  p.value *= 3.0f;
  RowVector<float> f(2);
  f << 1.0f, -1.0f;
  BevFeature out = instance_complete(rc, {{1, {{{0, 0}, f, 1.0f, 0, 1}}}}, p);
  EXPECT_TRUE(out.cell(0, 0).isApprox(3.0f * f));
}

TEST(PositionalEncoding, Layout) {
  RowVector<float> pe = positional_encoding(0, 0, 8);
  // sin(0) = 0 on even slots, cos(0) = 1 on odd slots, for both halves.
  for (int i = 0; i < 8; ++i) EXPECT_EQ(pe(i), i % 2 ? 1.0f : 0.0f);
  RowVector<float> a = positional_encoding(3, 0, 8), b = positional_encoding(3, 5, 8);
  EXPECT_TRUE(a.head(4) == b.head(4));
  EXPECT_FALSE(a.tail(4) == b.tail(4));
  EXPECT_FLOAT_EQ(positional_encoding(2, 0, 8)(0), std::sin(2.0f));
}

TEST(InstanceRefine, EmptyIsIdentity) {
  BevFeature b = random_plane(3, 4, 4, 6);
  EXPECT_TRUE(bit_equal(instance_refine(b, {}, identity_refine(4)), b));
}

TEST(InstanceRefine, SingleInstanceAddsItEverywhere) {
  BevFeature b = random_plane(3, 3, 4, 7);
  RowVector<float> f = RowVector<float>::Random(4);
  BevFeature out = instance_refine(b, {{{1, 1}, f, 0.9f, 0, 0}}, identity_refine(4), false);
  for (Eigen::Index i = 0; i < 9; ++i) EXPECT_TRUE(out.cells().row(i).isApprox(b.cells().row(i) + f, 1e-6f));
}

TEST(InstanceRefine, MatchesTwoStageOracle) {
  const int c = 6;
  BevFeature b = random_plane(4, 4, c, 8);
  std::vector<InstanceVector> inst;
  for (int i = 0; i < 4; ++i) inst.push_back({{i, 3 - i}, random_plane(1, 1, c, 20 + i).cells().row(0), 0.5f, 0, 0});
  BevFeature out = instance_refine(b, inst, identity_refine(c), true);
  std::vector<std::vector<double>> f, q;
  for (const auto& x : inst) {
    RowVector<float> pe = positional_encoding(x.position.h, x.position.w, c);
    std::vector<double> row(c);
    for (int j = 0; j < c; ++j) row[j] = double(x.feature(j)) + double(pe(j));
    f.push_back(row);
  }
  for (Eigen::Index i = 0; i < 16; ++i) {
    std::vector<double> row(c);
    for (int j = 0; j < c; ++j) row[j] = b.cells()(i, j);
    q.push_back(row);
  }
  auto f2 = brute_attend(f, f);
  auto cross = brute_attend(q, f2);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < c; ++j) EXPECT_NEAR(out.cells()(i, j), cross[i][j] + q[i][j], 1e-5);
  EXPECT_THROW(instance_refine(b, {{{0, 0}, RowVector<float>::Zero(2), 0.0f, 0, 0}}, identity_refine(c)), ShapeError);
}

TEST(Multiscale, PyramidDims) {
  ScalePyramid p = ScalePyramid::build(random_plane(13, 10, 2, 9), 3);
  EXPECT_EQ(p.levels[1].height(), 7);
  EXPECT_EQ(p.levels[1].width(), 5);
  EXPECT_EQ(p.levels[2].height(), 4);
  EXPECT_EQ(p.levels[2].width(), 3);
}

TEST(Multiscale, SingleAgentNoInstancesIsThreeTimesConstant) {
  const int c = 4;
  ModelDims d{c, c, c, 1};
  CollabWeights w = CollabWeights::from(WeightSet::defaults(d), d);
  BevFeature b(GridShape{8, 8, 1, c, 1.0, 1.0});
  b.cells().setConstant(0.25f);
  CollabConfig cfg;
  cfg.k_ir = {0, 0, 0};
  ScalePyramid p = ScalePyramid::build(b, 3);
  std::vector<Heatmap> hs;
  for (int s = 0; s < 3; ++s) hs.push_back(detection_heatmap(p.levels[s], w.head, s));
  BevFeature out = collaborate_multiscale(p, hs, {}, cfg, w);
  EXPECT_TRUE((out.cells().array() == 0.75f).all());
}

TEST(Multiscale, SenderOnlyObjectIncreases) {
  const int c = 4;
  ModelDims d{c, c, c, 1};
  CollabWeights w = CollabWeights::from(WeightSet::defaults(d), d);
  CollabConfig cfg;
  cfg.k_ic = 4;
  cfg.k_ir = {4, 2, 1};
  BevFeature rc(GridShape{16, 16, 1, c, 1.0, 1.0}, 0), sd(GridShape{16, 16, 1, c, 1.0, 1.0}, 1);
  for (int h = 9; h <= 10; ++h)
    for (int x = 4; x <= 5; ++x) sd(h, x, 0) = 4.0f;
  ScalePyramid prc = ScalePyramid::build(rc, 3), psd = ScalePyramid::build(sd, 3);
  std::vector<Heatmap> hrc, hsd;
  for (int s = 0; s < 3; ++s) {
    hrc.push_back(detection_heatmap(prc.levels[s], w.head, s));
    hsd.push_back(detection_heatmap(psd.levels[s], w.head, s));
  }
  SenderView view{1, psd.levels, hsd, {}};
  for (int s = 0; s < 3; ++s) view.broadcast.push_back(select_k_max(hsd[s], psd.levels[s], cfg.k_ir[s]));
  BevFeature alone = collaborate_multiscale(prc, hrc, {}, cfg, w);
  BevFeature with = collaborate_multiscale(prc, hrc, {view}, cfg, w);
  EXPECT_GT(with(9, 4, 0), alone(9, 4, 0));
  // Same result whatever the sender list order is.
  SenderView other{2, prc.levels, hrc, {}};
  EXPECT_TRUE(bit_equal(collaborate_multiscale(prc, hrc, {view, other}, cfg, w),
                        collaborate_multiscale(prc, hrc, {other, view}, cfg, w)));
}

TEST(Multiscale, IdealHeatmapsSelectEveryHiddenCell) {
  // Receiver sees nothing; the sender sees an object covering 8 cells; K_IC = 10 >= 8.
  Heatmap rc = heat(8, 8, std::vector<float>(64, 0.0f));
  std::vector<float> v(64, 0.0f);
  std::vector<int> object = {18, 19, 20, 21, 26, 27, 28, 29};
  for (int i : object) v[i] = 1.0f;
  Heatmap sd = heat(8, 8, v);
  auto sel = select_k_min(discrepancy(rc, sd), 10);
  for (int i : object) {
    EXPECT_NE(std::find(sel.begin(), sel.end(), Cell{i / 8, i % 8}), sel.end()) << i;
  }
}
