// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only when all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "copercept/collab/collab.hpp"
#include "copercept/comms/exchange.hpp"
#include "copercept/comms/graph.hpp"
#include "copercept/comms/message.hpp"
#include "copercept/core/attention.hpp"
#include "copercept/core/error.hpp"
#include "copercept/eval/detection.hpp"
#include "copercept/eval/experiment.hpp"
#include "copercept/fusion/compress.hpp"

using namespace copercept;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id = 0;
  std::string name;
  double limit_s = 0.0;
  Outcome outcome;
  double seconds = 0.0;
};

const fs::path& work_dir() {
  static const fs::path d = [] {
    const fs::path p = fs::temp_directory_path() / "copercept_acceptance";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return d;
}

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

/// Runs the CLI and returns (exit status, stdout).
std::pair<int, std::string> cli(const std::string& args) {
  const std::string cmd = std::string("\"") + COPERCEPT_CLI_PATH + "\" " + args + " 2>&1";
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return {-1, ""};
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) out.append(buf, n);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_table(const fs::path& p, char sep) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream file(slurp(p));
  for (std::string line; std::getline(file, line);) {
    std::vector<std::string> row;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, sep);) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

int column(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::runtime_error("missing column " + name);
  return static_cast<int>(it - header.begin());
}

// 1 ------------------------------------------------------------------------------------------

Outcome dense_bandwidth() {
  const auto [status, out] = cli("bandwidth --dense --h 256 --w 256 --c 64");
  if (status != 0) return {false, "exit status " + std::to_string(status)};
  const double v = std::stod(out);
  return {std::abs(v - 24.0) <= 0.005, "printed " + out.substr(0, out.find('\n'))};
}

// 2 ------------------------------------------------------------------------------------------

Outcome reduction_claim() {
  const double r = reduction_vs(23.18, 20.16);
  const double oracle = 100.0 * (1.0 - std::pow(2.0, 20.16 - 23.18));
  const bool ok = std::abs(r - 87.68) <= 0.05 && std::abs(r - 87.98) <= 1.0 && std::abs(r - oracle) < 1e-9;
  return {ok, "reduction " + fmt("%.4f", r) + "%, gap to 87.98% is " + fmt("%.2f", std::abs(r - 87.98)) + " pp"};
}

// 4 ------------------------------------------------------------------------------------------

Outcome attention_oracle() {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> mn(1, 16), cw(1, 32);
  std::normal_distribution<float> n01;
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int m = mn(rng), n = mn(rng), c = cw(rng), cv = cw(rng);
    const auto fill = [&](int r, int k) { return CellMatrix<float>::NullaryExpr(r, k, [&] { return n01(rng); }); };
    const CellMatrix<float> q = fill(m, c), k = fill(n, c), v = fill(n, cv);
    const CellMatrix<float> got = attention(q, k, v);
    for (int i = 0; i < m; ++i) {
      std::vector<double> e(n);
      double peak = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        double dot = 0.0;
        for (int x = 0; x < c; ++x) dot += double(q(i, x)) * double(k(j, x));
        e[j] = dot / std::sqrt(double(c));
        peak = std::max(peak, e[j]);
      }
      double z = 0.0;
      for (int j = 0; j < n; ++j) z += (e[j] = std::exp(e[j] - peak));
      for (int x = 0; x < cv; ++x) {
        double want = 0.0;
        for (int j = 0; j < n; ++j) want += e[j] / z * double(v(j, x));
        worst = std::max(worst, std::abs(want - double(got(i, x))));
      }
    }
  }
  return {worst <= 1e-5, "1000 cases, max abs error " + fmt("%.2e", worst)};
}

// 5 ------------------------------------------------------------------------------------------

Outcome topk_oracle() {
  std::mt19937 rng(77);
  std::uniform_int_distribution<int> dim(1, 16), level(-4, 4);
  std::normal_distribution<float> n01;
  int ties = 0;
  for (int t = 0; t < 1000; ++t) {
    const int h = dim(rng), w = dim(rng), cells = h * w;
    BevFeature plane(GridShape{h, w, 1, 1, 1.0, 1.0});
    const bool coarse = t % 2 == 0;
    for (int i = 0; i < cells; ++i) plane.cells()(i, 0) = coarse ? 0.25f * float(level(rng)) : n01(rng);
    const Heatmap hm = Heatmap::from(plane, t % 3);
    BevFeature feats(GridShape{h, w, 1, 3, 1.0, 1.0});
    feats.cells().setRandom();
    const int k = std::uniform_int_distribution<int>(0, cells)(rng);

    std::vector<int> asc(cells), desc(cells);
    std::iota(asc.begin(), asc.end(), 0);
    std::iota(desc.begin(), desc.end(), 0);
    const auto val = [&](int i) { return plane.cells()(i, 0); };
    std::stable_sort(asc.begin(), asc.end(), [&](int a, int b) { return val(a) < val(b); });
    std::stable_sort(desc.begin(), desc.end(), [&](int a, int b) { return val(a) > val(b); });
    if (k > 0 && k < cells && (val(asc[k - 1]) == val(asc[k]) || val(desc[k - 1]) == val(desc[k]))) ++ties;

    const std::vector<Cell> lo = select_k_min(hm, k);
    const std::vector<InstanceVector> hi = select_k_max(hm, feats, k);
    if (static_cast<int>(lo.size()) != k || static_cast<int>(hi.size()) != k) {
      return {false, "case " + std::to_string(t) + ": wrong count"};
    }
    for (int i = 0; i < k; ++i) {
      const int a = lo[i].h * w + lo[i].w;
      const int b = hi[i].position.h * w + hi[i].position.w;
      if (a != asc[i] || b != desc[i] || hi[i].heat != val(b) || hi[i].feature != feats.cells().row(b) ||
          hi[i].scale != hm.scale) {
        return {false, "case " + std::to_string(t) + " rank " + std::to_string(i) + " differs from stable sort"};
      }
    }
  }
  return {true, "1000 heatmaps, " + std::to_string(ties) + " with a tie across the cut"};
}

// 6 ------------------------------------------------------------------------------------------

std::vector<WireSchema> schemas() {
  return {WireSchema{GridShape{8, 8, 4, 4, 1.0, 1.0}, CompressionStrategy::named("m3"), 8, 3},
          WireSchema{GridShape{16, 12, 8, 6, 0.5, 0.5}, CompressionStrategy::named("m1"), 16, 3},
          WireSchema{GridShape{12, 20, 4, 3, 1.0, 1.0}, CompressionStrategy::named("m2"), 5, 2},
          WireSchema{GridShape{4, 4, 2, 2, 1.0, 1.0}, CompressionStrategy::named("none"), 1, 1}};
}

float fuzz_float(std::mt19937& rng) {
  switch (std::uniform_int_distribution<int>(0, 9)(rng)) {
    case 0:
      return -0.0f;
    case 1:
      return std::numeric_limits<float>::denorm_min();
    case 2:
      return std::numeric_limits<float>::max();
    case 3:
      return -std::numeric_limits<float>::min();
    default:
      return std::normal_distribution<float>(0.0f, 10.0f)(rng);
  }
}

Message fuzz_message(std::mt19937& rng, const WireSchema& s) {
  std::uniform_int_distribution<std::uint32_t> id;
  std::uniform_int_distribution<int> count(0, 40), cell(-100000, 100000);
  Message m;
  m.kind = static_cast<MessageKind>(std::uniform_int_distribution<int>(1, 5)(rng));
  m.sender = id(rng);
  m.receiver = id(rng);
  m.scale = m.kind == MessageKind::kVoxelPrior ? 0 : std::uniform_int_distribution<int>(0, s.scales - 1)(rng);
  switch (m.kind) {
    case MessageKind::kVoxelPrior:
      m.values.resize(voxel_bytes(s.prior_shape()) / 4);
      break;
    case MessageKind::kHeatmapShare:
      m.values.resize(s.level_shape(m.scale).columns());
      break;
    case MessageKind::kInstanceQuery:
      m.positions.resize(count(rng));
      for (Cell& c : m.positions) c = {cell(rng), cell(rng)};
      break;
    default:
      m.instances.resize(count(rng));
      for (InstanceVector& v : m.instances) {
        v.position = {cell(rng), cell(rng)};
        v.feature = RowVector<float>::NullaryExpr(s.feature_channels, [&] { return fuzz_float(rng); });
        v.heat = fuzz_float(rng);
        v.scale = m.scale;
        v.owner = m.sender;
      }
  }
  for (float& v : m.values) v = fuzz_float(rng);
  return m;
}

void put_u32(std::vector<std::byte>& b, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[at + i] = std::byte(v >> (8 * i));
}

Outcome wire_roundtrip() {
  std::mt19937 rng(99);
  const auto all = schemas();
  for (int t = 0; t < 10000; ++t) {
    const WireSchema& s = all[t % all.size()];
    const Message m = fuzz_message(rng, s);
    const auto bytes = encode(m);
    Message back;
    try {
      back = decode(bytes, s);
    } catch (const std::exception& e) {
      return {false, "valid message " + std::to_string(t) + " rejected: " + e.what()};
    }
    if (!(back == m) || encode(back) != bytes) return {false, "message " + std::to_string(t) + " not bit-exact"};
  }

  int errors = 0, flips_ok = 0;
  for (int t = 0; t < 1000; ++t) {
    const WireSchema& s = all[t % all.size()];
    Message m = fuzz_message(rng, s);
    const int category = t % 9;
    if (category == 7) {  // needs a float payload
      m.kind = MessageKind::kHeatmapShare;
      m.positions.clear();
      m.instances.clear();
      m.values.assign(s.level_shape(m.scale).columns(), 0.5f);
    }
    std::vector<std::byte> b = encode(m);
    const std::size_t n = b.size();
    switch (category) {
      case 0:
        b.resize(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
        break;
      case 1:
        b.resize(n + std::uniform_int_distribution<std::size_t>(1, 8)(rng), std::byte{0});
        break;
      case 2:
        b[std::uniform_int_distribution<int>(0, 3)(rng)] ^= std::byte{0x5A};
        break;
      case 3:
        b[4] = std::byte(std::uniform_int_distribution<int>(2, 255)(rng));
        break;
      case 4:
        b[6] = std::byte(std::uniform_int_distribution<int>(0, 1)(rng) == 0 ? 0 : 6 + t % 250);
        break;
      case 5:
        b[15] = std::byte(std::uniform_int_distribution<int>(s.scales, 255)(rng));
        break;
      case 6:
        put_u32(b, 16, static_cast<std::uint32_t>(n - kHeaderBytes) + std::uniform_int_distribution<std::uint32_t>(1, 64)(rng));
        break;
      case 7: {
        const float bad[3] = {std::numeric_limits<float>::quiet_NaN(), std::numeric_limits<float>::infinity(),
                              -std::numeric_limits<float>::infinity()};
        const std::size_t slot = std::uniform_int_distribution<std::size_t>(0, m.values.size() - 1)(rng);
        std::memcpy(b.data() + kHeaderBytes + 4 * slot, &bad[t % 3], 4);
        break;
      }
      default:
        for (int f = 0; f < 4; ++f) b[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)] ^= std::byte(1 + f);
    }
    try {
      decode(b, s);
      if (category != 8) return {false, "corruption case " + std::to_string(t) + " decoded without error"};
      ++flips_ok;
    } catch (const DecodeError&) {
      ++errors;
    } catch (const std::exception& e) {
      return {false, "corruption case " + std::to_string(t) + " raised a non-decode error: " + e.what()};
    }
  }
  return {true, "10000 round trips bit-exact; 1000 corruptions: " + std::to_string(errors) + " rejected, " +
                    std::to_string(flips_ok) + " random flips still well-formed"};
}

// 7 ------------------------------------------------------------------------------------------

Outcome occlusion_recovery() {
  int scenes = 0, occluded_total = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const int agents = 2 + static_cast<int>(seed % 3);
    ExperimentConfig c;
    c.scene_params.agent_count = agents;
    c.scene_params.occluded_count = 1;
    c.agents = agents;
    c.heatmaps = HeatmapSource::kOracle;
    c.seeds = {seed};
    const SeedResult collab = run_seed(c, seed);
    ExperimentConfig solo = c;
    solo.agents = 1;
    const SeedResult alone = run_seed(solo, seed);
    const std::string where = "scene " + std::to_string(seed) + " (" + std::to_string(agents) + " agents)";
    if (collab.occluded.empty()) return {false, where + " has no ego-occluded, sender-visible object"};
    const auto with = matched_ground_truth(collab.detections, collab.ground_truth, 0.3);
    const auto without = matched_ground_truth(alone.detections, alone.ground_truth, 0.3);
    int hit_with = 0, hit_without = 0;
    for (int i : collab.occluded) {
      hit_with += with[i] ? 1 : 0;
      hit_without += without[i] ? 1 : 0;
    }
    const int n = static_cast<int>(collab.occluded.size());
    if (hit_with != n) return {false, where + ": collaborative recall " + std::to_string(hit_with) + "/" + std::to_string(n)};
    if (hit_without == n) return {false, where + ": no-collaboration recall is already 1"};
    ++scenes;
    occluded_total += n;
  }
  return {true, std::to_string(scenes) + " scenes, " + std::to_string(occluded_total) +
                    " occluded objects: collaborative recall 1.0, no-collaboration recall < 1.0 on each"};
}

// 8 ------------------------------------------------------------------------------------------

bool same_bits(const BevFeature& a, const BevFeature& b) {
  return a.cells().rows() == b.cells().rows() && a.cells().cols() == b.cells().cols() &&
         std::memcmp(a.cells().data(), b.cells().data(), sizeof(float) * a.cells().size()) == 0;
}

Outcome budget_law() {
  int runs = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const int agents = 2 + static_cast<int>(seed % 3);
    ExperimentConfig c;
    c.scene_params.agent_count = agents;
    c.scene_params.occluded_count = agents - 1;
    c.agents = agents;
    const Scene scene = scene_for(c, seed);
    const ModelDims dims = c.dims();
    const PipelineWeights w = PipelineWeights::from(WeightSet::defaults(dims), dims);
    const std::vector<AgentInput> inputs = encode_agents(scene, c, w, seed);
    std::vector<AgentId> ids;
    for (const AgentInput& a : inputs) ids.push_back(a.id);
    const AgentId ego = scene.agents.front().id;
    const CommGraph graph = CommGraph::complete(ids);

    ExchangeConfig x = c.exchange_config();
    const std::size_t total = run_exchange(inputs, graph, x, w).ledger.total();
    const ExchangeResult alone = run_exchange({inputs.front()}, CommGraph::complete({ego}), x, w);
    for (const double frac : {0.0, 0.25, 0.5, 1.0}) {
      x.budget_bytes = static_cast<std::size_t>(std::floor(frac * double(total)));
      const ExchangeResult r = run_exchange(inputs, graph, x, w);
      ++runs;
      const std::string where = "seed " + std::to_string(seed) + " budget " + fmt("%.0f%%", 100 * frac);
      if (r.ledger.total() > *x.budget_bytes) {
        return {false, where + ": ledger " + std::to_string(r.ledger.total()) + " > " + std::to_string(*x.budget_bytes)};
      }
      if (frac == 0.0) {
        const AgentOutput& a = r.agent(ego);
        const AgentOutput& b = alone.agent(ego);
        if (!same_bits(a.fused, b.fused) || !same_bits(a.stage1, b.stage1)) {
          return {false, where + ": output differs from the single-agent baseline"};
        }
      }
    }
  }
  return {true, std::to_string(runs) + " budgeted runs within budget; zero budget equals the single-agent baseline bit-exactly"};
}

// 9 ------------------------------------------------------------------------------------------

Outcome trends() {
  ExperimentConfig c;
  c.scene_params.agent_count = 4;
  c.scene_params.occluded_count = 3;
  c.agents = 4;
  c.seeds.clear();
  for (std::uint64_t s = 0; s < 20; ++s) c.seeds.push_back(s);

  SweepSpec by_agents;
  by_agents.agents = {1, 2, 3, 4};
  const EvalReport a = run_experiment(c, by_agents, jobs());
  SweepSpec by_noise;
  by_noise.noise = {0.0, 0.2, 0.4, 0.6};
  const EvalReport n = run_experiment(c, by_noise, jobs());

  bool ok = true;
  std::string detail = "AP50 by agents";
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    detail += " " + fmt("%.3f", a.points[i].mean_ap(1));
    if (i > 0) ok = ok && a.points[i].mean_ap(1) >= a.points[i - 1].mean_ap(1);
  }
  detail += "; by noise";
  for (std::size_t i = 0; i < n.points.size(); ++i) {
    detail += " " + fmt("%.3f", n.points[i].mean_ap(1));
    if (i > 0) ok = ok && n.points[i].mean_ap(1) <= n.points[i - 1].mean_ap(1);
  }
  return {ok, detail + " (20 seeds)"};
}

// 10 -----------------------------------------------------------------------------------------

Outcome determinism() {
  const fs::path cfg = work_dir() / "determinism.yaml";
  std::ofstream(cfg) << "seeds: [3, 4]\nagents: 3\nscene: {generate: {agents: 3, occluded: 2}}\n"
                        "noise: {sigma_p: 0.2, sigma_r: 0.2, seed: 5}\ncomms: {budget: 150000, shuffle_seed: 8}\n";
  const std::vector<std::string> files{"report.csv", "runs.csv", "summary.txt", "ledger.tsv",
                                       "drops.tsv", "ground_truth.csv", "detections.csv"};
  std::vector<fs::path> dirs;
  for (int i = 0; i < 3; ++i) {
    const fs::path out = work_dir() / ("det" + std::to_string(i));
    const std::string extra = i == 2 ? " --jobs 2" : "";
    const auto [status, text] = cli("run --config \"" + cfg.string() + "\" --output \"" + out.string() + "\"" + extra);
    if (status != 0) return {false, "run exited " + std::to_string(status) + ": " + text};
    dirs.push_back(out);
  }
  for (const std::string& f : files) {
    const std::string first = slurp(dirs[0] / f);
    if (first.empty() && f != "drops.tsv") return {false, f + " is empty"};
    for (std::size_t i = 1; i < dirs.size(); ++i) {
      if (slurp(dirs[i] / f) != first) return {false, f + " differs between runs"};
    }
  }
  return {true, "3 runs (one with 2 jobs), 7 report and ledger files byte-identical"};
}

// 11 -----------------------------------------------------------------------------------------

Outcome ablation_sweep() {
  const fs::path out = work_dir() / "sweep";
  const auto [status, text] = cli("sweep --seeds 2 --k-ic 10,15,20,25,30 --k-ir 100/50/25,50/25/12 "
                                  "--strategy m1,m2,m3 --jobs " + std::to_string(jobs()) + " --output \"" +
                                  out.string() + "\"");
  if (status != 0) return {false, "sweep exited " + std::to_string(status) + ": " + text};
  const auto rows = read_table(out / "sweep.csv", ',');
  if (rows.size() != 31) return {false, "sweep.csv has " + std::to_string(rows.size() - 1) + " rows, want 30"};
  const auto& h = rows.front();
  const int c_point = column(h, "point"), c_strategy = column(h, "strategy"), c_kic = column(h, "k_ic"),
            c_kir = column(h, "k_ir"), c_bytes = column(h, "mean_bytes");

  std::map<std::string, std::string> strategy_of;
  std::map<std::string, std::map<std::string, double>> total;  // (k_ic|k_ir) -> strategy -> bytes
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    strategy_of[r[c_point]] = r[c_strategy];
    total[r[c_kic] + "|" + r[c_kir]][r[c_strategy]] = std::stod(r[c_bytes]);
  }
  if (total.size() != 10) return {false, "expected 10 (k_ic, k_ir) cells, got " + std::to_string(total.size())};

  const auto ledger = read_table(out / "ledger.tsv", '\t');
  const int l_point = column(ledger.front(), "point"), l_kind = column(ledger.front(), "kind"),
            l_bytes = column(ledger.front(), "bytes");
  std::map<std::string, double> prior;  // strategy -> voxel prior bytes summed over its points
  for (std::size_t i = 1; i < ledger.size(); ++i) {
    if (ledger[i][l_kind] == "VoxelPrior") prior[strategy_of[ledger[i][l_point]]] += std::stod(ledger[i][l_bytes]);
  }

  for (const auto& [cell, by] : total) {
    if (by.size() != 3 || !(by.at("m3") > by.at("m1") && by.at("m1") > by.at("m2"))) {
      return {false, "byte order violated at k_ic|k_ir " + cell};
    }
  }
  if (!(prior["m3"] > prior["m1"] && prior["m1"] > prior["m2"])) return {false, "voxel prior ledger order violated"};
  const auto& ref = total.at("20|100/50/25");
  return {true, "30-point grid; at K_IC 20, 100/50/25: M3 " + fmt("%.0f", ref.at("m3")) + " > M1 " +
                    fmt("%.0f", ref.at("m1")) + " > M2 " + fmt("%.0f", ref.at("m2")) + " bytes"};
}

Outcome guarded(const std::function<Outcome()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

}  // namespace

int main() {
  std::vector<Criterion> cs{
      {1, "dense bandwidth formula", 1.0, {}, 0.0},       {2, "reduction claim accounting", 1.0, {}, 0.0},
      {3, "AP substitution by property suite", 0.0, {}, 0.0}, {4, "attention oracle", 10.0, {}, 0.0},
      {5, "top-k oracle", 5.0, {}, 0.0},                  {6, "wire round trip", 10.0, {}, 0.0},
      {7, "occlusion recovery", 60.0, {}, 0.0},           {8, "budget law", 30.0, {}, 0.0},
      {9, "agent and noise trends", 300.0, {}, 0.0},      {10, "determinism", 30.0, {}, 0.0},
      {11, "ablation sweep", 300.0, {}, 0.0}};
  const std::map<int, std::function<Outcome()>> body{
      {1, dense_bandwidth}, {2, reduction_claim}, {4, attention_oracle}, {5, topk_oracle},
      {6, wire_roundtrip},  {7, occlusion_recovery}, {8, budget_law}, {9, trends},
      {10, determinism},    {11, ablation_sweep}};

  for (Criterion& c : cs) {
    if (c.id == 3) continue;
    const auto t0 = std::chrono::steady_clock::now();
    c.outcome = guarded(body.at(c.id));
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.outcome.pass && c.seconds > c.limit_s) {
      c.outcome = {false, c.outcome.detail + "; too slow, limit " + fmt("%.0f s", c.limit_s)};
    }
  }
  // Trained-network AP values cannot be reproduced here; the criterion stands on the property suite.
  bool rest = true;
  for (const Criterion& c : cs) rest = rest && (c.id < 4 || c.outcome.pass);
  cs[2].outcome = {rest, rest ? "AP values not reproduced; properties 4-11 all pass" : "a property criterion failed"};

  bool all = true;
  for (const Criterion& c : cs) {
    std::printf("%s %d %s: %s (%.2f s)\n", c.outcome.pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                c.outcome.detail.c_str(), c.seconds);
    all = all && c.outcome.pass;
  }
  return all ? 0 : 1;
}
