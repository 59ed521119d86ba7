#include "copercept/cli/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "copercept/collab/collab.hpp"
#include "copercept/comms/message.hpp"
#include "copercept/core/attention.hpp"
#include "copercept/eval/experiment.hpp"

namespace copercept {

namespace {

CheckOutcome check_attention(std::mt19937& rng) {
  std::uniform_int_distribution<int> dim(1, 12);
  std::normal_distribution<double> n01;
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int m = dim(rng), n = dim(rng), c = dim(rng), cv = dim(rng);
    const auto fill = [&](int r, int k) { return CellMatrix<double>::NullaryExpr(r, k, [&] { return n01(rng); }); };
    const CellMatrix<double> q = fill(m, c), k = fill(n, c), v = fill(n, cv);
    const CellMatrix<double> got = attention(q, k, v);
    for (int i = 0; i < m; ++i) {
      std::vector<double> logit(n);
      for (int j = 0; j < n; ++j) {
        double dot = 0.0;
        for (int x = 0; x < c; ++x) dot += q(i, x) * k(j, x);
        logit[j] = dot / std::sqrt(double(c));
      }
      const double peak = *std::max_element(logit.begin(), logit.end());
      double z = 0.0;
      for (double& l : logit) z += (l = std::exp(l - peak));
      for (int x = 0; x < cv; ++x) {
        double want = 0.0;
        for (int j = 0; j < n; ++j) want += logit[j] / z * v(j, x);
        worst = std::max(worst, std::abs(want - got(i, x)));
      }
    }
  }
  std::ostringstream os;
  os << "200 cases, max error " << worst;
  return {"attention matches loop oracle", worst < 1e-9, os.str()};
}

CheckOutcome check_topk(std::mt19937& rng) {
  std::uniform_int_distribution<int> dim(1, 9), level(-3, 3);
  for (int t = 0; t < 200; ++t) {
    const int h = dim(rng), w = dim(rng);
    BevFeature plane(GridShape{h, w, 1, 1, 1.0, 1.0});
    for (Eigen::Index i = 0; i < plane.cells().rows(); ++i) plane.cells()(i, 0) = 0.5f * float(level(rng));
    const Heatmap hm = Heatmap::from(plane, 0);
    const int k = std::uniform_int_distribution<int>(0, h * w)(rng);
    std::vector<int> order(h * w);
    std::iota(order.begin(), order.end(), 0);
    std::vector<int> asc = order, desc = order;
    std::stable_sort(asc.begin(), asc.end(), [&](int a, int b) { return plane.cells()(a, 0) < plane.cells()(b, 0); });
    std::stable_sort(desc.begin(), desc.end(), [&](int a, int b) { return plane.cells()(a, 0) > plane.cells()(b, 0); });
    const auto lo = select_k_min(hm, k);
    const auto hi = select_k_max(hm, plane, k);
    for (int i = 0; i < k; ++i) {
      if (lo[i].h * w + lo[i].w != asc[i] || hi[i].position.h * w + hi[i].position.w != desc[i]) {
        return {"top-k matches stable sort", false, "case " + std::to_string(t) + " rank " + std::to_string(i)};
      }
    }
  }
  return {"top-k matches stable sort", true, "200 cases"};
}

CheckOutcome check_wire(std::mt19937& rng) {
  const WireSchema s{GridShape{8, 8, 4, 4, 1.0, 1.0}, CompressionStrategy::named("m3"), 8, 3};
  std::uniform_int_distribution<int> kind(2, 5), scale(0, 2), count(0, 10);
  std::normal_distribution<float> n01;
  int rejected = 0;
  for (int t = 0; t < 300; ++t) {
    Message m;
    m.kind = static_cast<MessageKind>(kind(rng));
    m.sender = 1;
    m.receiver = 2;
    m.scale = scale(rng);
    if (m.kind == MessageKind::kHeatmapShare) {
      m.values.resize(s.level_shape(m.scale).columns());
      for (float& v : m.values) v = n01(rng);
    } else if (m.kind == MessageKind::kInstanceQuery) {
      m.positions.resize(count(rng));
      for (Cell& c : m.positions) c = {count(rng), count(rng)};
    } else {
      m.instances.resize(count(rng));
      for (auto& inst : m.instances) {
        inst.position = {count(rng), count(rng)};
        inst.feature = RowVector<float>::NullaryExpr(s.feature_channels, [&] { return n01(rng); });
        inst.heat = n01(rng);
        inst.scale = m.scale;
        inst.owner = m.sender;
      }
    }
    auto bytes = encode(m);
    if (!(decode(bytes, s) == m)) return {"wire round trip", false, "message " + std::to_string(t)};
    bytes.resize(std::uniform_int_distribution<std::size_t>(0, bytes.size() - 1)(rng));
    try {
      decode(bytes, s);
    } catch (const DecodeError&) {
      ++rejected;
    }
  }
  return {"wire round trip and truncation", rejected == 300, "300 messages, " + std::to_string(rejected) + " truncations rejected"};
}

CheckOutcome check_dense_formula() {
  const double v = dense_volume(256, 256, 64);
  std::ostringstream os;
  os.precision(4);
  os << "dense 256x256x64 = " << v;
  return {"dense bandwidth formula", std::abs(v - 24.0) < 1e-9, os.str()};
}

ExperimentConfig small_experiment(std::uint64_t seed) {
  ExperimentConfig c;
  c.grid = GridShape{32, 32, 8, 16, 1.0, 0.5};
  c.scene_params.world_width_m = 40.0;
  c.scene_params.world_height_m = 40.0;
  c.scene_params.sensor_range_m = 24.0;
  c.scene_params.box_count = 6;
  c.scene_params.occluded_count = 1;
  c.scene_params.agent_count = 2;
  c.seeds = {seed};
  return c;
}

bool same_detections(const SeedResult& a, const SeedResult& b) {
  if (a.detections.size() != b.detections.size()) return false;
  for (std::size_t i = 0; i < a.detections.size(); ++i) {
    const auto& x = a.detections[i];
    const auto& y = b.detections[i];
    if (x.score != y.score || x.box.x != y.box.x || x.box.y != y.box.y) return false;
  }
  return true;
}

CheckOutcome check_budget(std::uint64_t seed) {
  ExperimentConfig c = small_experiment(seed);
  const SeedResult full = run_seed(c, seed);
  const std::size_t total = full.ledger.total();
  for (const double frac : {0.25, 0.5, 1.0}) {
    c.budget_bytes = static_cast<std::size_t>(frac * double(total));
    const SeedResult r = run_seed(c, seed);
    if (r.ledger.total() > *c.budget_bytes) return {"budget law", false, "budget exceeded at " + std::to_string(frac)};
  }
  c.budget_bytes = 0;
  const SeedResult zero = run_seed(c, seed);
  ExperimentConfig solo = small_experiment(seed);
  solo.agents = 1;
  const SeedResult alone = run_seed(solo, seed);
  const bool ok = zero.ledger.total() == 0 && same_detections(zero, alone);
  return {"budget law", ok, "unconstrained total " + std::to_string(total) + " bytes"};
}

CheckOutcome check_determinism(std::uint64_t seed) {
  ExperimentConfig c = small_experiment(seed);
  const EvalReport a = run_experiment(c);
  const EvalReport b = run_experiment(c);
  const bool ok = a.csv() == b.csv() && a.ledger_tsv() == b.ledger_tsv() && a.detections_csv() == b.detections_csv();
  return {"run determinism", ok, "report, ledger and detections compared"};
}

}  // namespace

std::vector<CheckOutcome> run_selftest(std::uint64_t seed) {
  std::mt19937 rng(static_cast<std::uint32_t>(seed));
  std::vector<CheckOutcome> out;
  out.push_back(check_attention(rng));
  out.push_back(check_topk(rng));
  out.push_back(check_wire(rng));
  out.push_back(check_dense_formula());
  out.push_back(check_budget(seed));
  out.push_back(check_determinism(seed));
  return out;
}

}  // namespace copercept
