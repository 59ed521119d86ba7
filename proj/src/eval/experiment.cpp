#include "copercept/eval/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "copercept/core/error.hpp"
#include "copercept/sim/encoders.hpp"

namespace copercept {

namespace {

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string join_ints(const std::vector<int>& v, char sep = '/') {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? std::string(1, sep) : "") + std::to_string(v[i]);
  return out;
}

std::string budget_text(const std::optional<std::size_t>& b) { return b ? std::to_string(*b) : "none"; }

std::string heatmap_text(HeatmapSource s) { return s == HeatmapSource::kOracle ? "oracle" : "learned"; }

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

BevBox to_ego(const Box3D& b, const Pose& ego) {
  const double r = -ego.yaw * std::numbers::pi / 180.0;
  const double dx = b.x - ego.x, dy = b.y - ego.y;
  return {std::cos(r) * dx - std::sin(r) * dy, std::sin(r) * dx + std::cos(r) * dy, b.length, b.width,
          normalize_degrees(b.yaw - ego.yaw)};
}

}  // namespace

ExchangeConfig ExperimentConfig::exchange_config() const {
  ExchangeConfig x;
  x.mix_enabled = strategy != "off";
  x.compression = CompressionStrategy::named(strategy == "off" ? "m1" : strategy);
  x.collab = collab;
  x.heatmaps = heatmaps;
  x.budget_bytes = budget_bytes;
  x.hmf_window = hmf_window;
  x.shuffle_seed = shuffle_seed;
  return x;
}

void ExperimentConfig::validate() const {
  try {
    grid.validate();
  } catch (const ShapeError& e) {
    throw ConfigError("grid", e.what());
  }
  if (grid.channels < kMinProxyChannels) {
    throw ConfigError("grid.channels", "must be >= " + std::to_string(kMinProxyChannels));
  }
  if (seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
  if (agents < 1) throw ConfigError("agents", "must be >= 1");
  const int available = scene ? static_cast<int>(scene->agents.size()) : scene_params.agent_count;
  if (agents > available) {
    throw ConfigError("agents", std::to_string(agents) + " requested but the scene has " + std::to_string(available));
  }
  try {
    if (scene) {
      scene->validate();
    } else {
      scene_params.validate();
    }
  } catch (const ParameterError& e) {
    throw ConfigError(scene ? "scene" : "scene.generate", e.what());
  }
  if (mlp_layers < 1) throw ConfigError("hmf.mlp_layers", "must be >= 1");
  if (hmf_window < 1 || hmf_window % 2 == 0) throw ConfigError("hmf.window", "must be a positive odd number");
  try {
    noise.validate();
  } catch (const std::exception& e) {
    throw ConfigError("noise", e.what());
  }
  if (comm_range_m && !(*comm_range_m >= 0.0)) throw ConfigError("comms.comm_range", "must be >= 0");
  if (!(decode.threshold >= 0.0 && decode.threshold <= 1.0)) throw ConfigError("decode.threshold", "must be in [0, 1]");
  if (!(decode.length > 0.0) || !(decode.width > 0.0)) throw ConfigError("decode.box", "sizes must be positive");
  if (strategy != "off" && strategy != "m1" && strategy != "m2" && strategy != "m3" && strategy != "none") {
    throw ConfigError("mix_voxel.strategy", "unknown strategy '" + strategy + "'");
  }
  try {
    collab.validate();
  } catch (const ParameterError& e) {
    throw ConfigError("collab", e.what());
  }
  if (strategy != "off") {
    const auto f = CompressionStrategy::named(strategy).factors;
    if (grid.h_cells % f[0] || grid.w_cells % f[1] || grid.l_bins % f[2]) {
      throw ConfigError("mix_voxel.strategy", "grid " + grid.describe() + " not divisible by the " + strategy +
                                                  " factors");
    }
  }
  if (weights) {
    try {
      weights->validate(dims());
    } catch (const std::exception& e) {
      throw ConfigError("weights", e.what());
    }
  }
}

bool SweepSpec::empty() const {
  return agents.empty() && noise.empty() && strategy.empty() && k_ic.empty() && k_ir.empty();
}

std::vector<ExperimentConfig> SweepSpec::expand(const ExperimentConfig& base) const {
  auto or_base = [](auto axis, auto value) {
    if (axis.empty()) axis.push_back(value);
    return axis;
  };
  const auto ag = or_base(agents, base.agents);
  const auto no = or_base(noise, -1.0);
  const auto st = or_base(strategy, base.strategy);
  const auto ki = or_base(k_ic, base.collab.k_ic);
  const auto kr = or_base(k_ir, base.collab.k_ir);

  ExperimentConfig shared = base;
  // Every agent count draws from the same scenes, generated with the largest count.
  if (!base.scene) {
    shared.scene_params.agent_count = std::max(base.scene_params.agent_count, *std::max_element(ag.begin(), ag.end()));
  }
  std::vector<ExperimentConfig> out;
  for (int a : ag) {
    for (double n : no) {
      for (const auto& s : st) {
        for (int k : ki) {
          for (const auto& r : kr) {
            ExperimentConfig c = shared;
            c.agents = a;
            if (n >= 0.0) c.noise.sigma_p = c.noise.sigma_r = n;
            c.strategy = s;
            c.collab.k_ic = k;
            c.collab.k_ir = r;
            out.push_back(std::move(c));
          }
        }
      }
    }
  }
  return out;
}

Scene scene_for(const ExperimentConfig& cfg, std::uint64_t seed) {
  return cfg.scene ? *cfg.scene : generate_scene(seed, cfg.scene_params);
}

std::vector<AgentInput> encode_agents(const Scene& scene, const ExperimentConfig& cfg, const PipelineWeights& w,
                                      std::uint64_t seed) {
  const NoiseSpec noise{cfg.noise.sigma_p, cfg.noise.sigma_r, mix_seed(cfg.noise.seed, seed)};
  std::vector<AgentInput> out(cfg.agents);
  for (int i = 0; i < cfg.agents; ++i) {
    const AgentState& a = scene.agents.at(i);
    AgentInput& in = out[i];
    in.id = a.id;
    in.believed_pose = perturb_pose(a.pose, noise, a.id);
    in.lidar = lidar_proxy_encode(scene, a.id, cfg.grid, w.stage1.collapse_lidar).voxel;
    in.camera = camera_proxy_encode(scene, a.id, cfg.grid);
    if (cfg.heatmaps == HeatmapSource::kOracle) in.ideal_heat = ideal_heatmap(scene, a.id, cfg.grid);
  }
  return out;
}

std::vector<BevBox> ground_truth(const Scene& scene, const GridShape& grid) {
  const Pose& ego = scene.agents.front().pose;
  const double hx = 0.5 * grid.w_cells * grid.cell_size_m, hy = 0.5 * grid.h_cells * grid.cell_size_m;
  std::vector<BevBox> out;
  for (const Box3D& b : scene.boxes) {
    const BevBox e = to_ego(b, ego);
    if (std::abs(e.x) < hx && std::abs(e.y) < hy) out.push_back(e);
  }
  return out;
}

BandwidthEstimate estimate_bandwidth(const ExperimentConfig& cfg) {
  cfg.validate();
  const ModelDims dims = cfg.dims();
  const PipelineWeights w = PipelineWeights::from(cfg.weights ? *cfg.weights : WeightSet::defaults(dims), dims);
  std::vector<AgentId> ids;
  std::vector<Pose> poses;
  for (int i = 0; i < cfg.agents; ++i) {
    ids.push_back(cfg.scene ? cfg.scene->agents[i].id : static_cast<AgentId>(i));
    if (cfg.scene) poses.push_back(cfg.scene->agents[i].pose);
  }
  const CommGraph graph = cfg.scene && cfg.comm_range_m ? CommGraph::within_range(ids, poses, *cfg.comm_range_m)
                                                        : CommGraph::complete(ids);
  const ExchangeConfig x = cfg.exchange_config();
  const WireSchema schema{cfg.grid, x.compression, static_cast<int>(w.stage1.hmf.concat.weight.rows()),
                          cfg.collab.scales};
  return estimate_bandwidth(schema, x, graph);
}

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  const Scene scene = scene_for(cfg, seed);
  if (static_cast<int>(scene.agents.size()) < cfg.agents) {
    throw ConfigError("agents", "scene has only " + std::to_string(scene.agents.size()) + " agents");
  }
  const ModelDims dims = cfg.dims();
  const PipelineWeights w = PipelineWeights::from(cfg.weights ? *cfg.weights : WeightSet::defaults(dims), dims);
  const std::vector<AgentInput> inputs = encode_agents(scene, cfg, w, seed);

  std::vector<AgentId> ids;
  std::vector<Pose> poses;
  for (int i = 0; i < cfg.agents; ++i) {
    ids.push_back(scene.agents[i].id);
    poses.push_back(scene.agents[i].pose);
  }
  const CommGraph graph =
      cfg.comm_range_m ? CommGraph::within_range(ids, poses, *cfg.comm_range_m) : CommGraph::complete(ids);
  ExchangeResult ex = run_exchange(inputs, graph, cfg.exchange_config(), w);

  const AgentOutput& ego = ex.agent(ids.front());
  const Heatmap hm = detection_heatmap(ego.fused, w.collab.head);

  SeedResult r;
  r.seed = seed;
  r.detections = decode_detections(ego.fused, hm, cfg.decode);
  r.ledger = std::move(ex.ledger);

  const Pose& ego_pose = scene.agents.front().pose;
  const double hx = 0.5 * cfg.grid.w_cells * cfg.grid.cell_size_m, hy = 0.5 * cfg.grid.h_cells * cfg.grid.cell_size_m;
  for (std::size_t i = 0; i < scene.boxes.size(); ++i) {
    const BevBox e = to_ego(scene.boxes[i], ego_pose);
    if (!(std::abs(e.x) < hx && std::abs(e.y) < hy)) continue;
    r.ground_truth.push_back(e);
    if (visible_samples(scene, scene.agents.front(), static_cast<int>(i)) > 0) continue;
    for (int a = 1; a < cfg.agents; ++a) {
      if (graph.linked(scene.agents[a].id, ids.front()) &&
          visible_samples(scene, scene.agents[a], static_cast<int>(i)) > 0) {
        r.occluded.push_back(static_cast<int>(r.ground_truth.size()) - 1);
        break;
      }
    }
  }
  for (int k = 0; k < 3; ++k) r.ap[k] = average_precision(r.detections, r.ground_truth, kIouThresholds[k]);
  if (!r.occluded.empty()) {
    const std::vector<bool> hit = matched_ground_truth(r.detections, r.ground_truth, kIouThresholds[0]);
    int found = 0;
    for (int i : r.occluded) found += hit[i] ? 1 : 0;
    r.occluded_recall = double(found) / double(r.occluded.size());
  }
  return r;
}

double PointResult::mean_ap(int which) const {
  double s = 0.0;
  for (const auto& r : runs) s += r.ap[which];
  return runs.empty() ? 0.0 : s / double(runs.size());
}

double PointResult::mean_bytes() const {
  double s = 0.0;
  for (const auto& r : runs) s += double(r.ledger.total());
  return runs.empty() ? 0.0 : s / double(runs.size());
}

EvalReport run_experiment(const ExperimentConfig& base, const SweepSpec& sweep, int jobs) {
  const std::vector<ExperimentConfig> points = sweep.expand(base);
  for (const auto& p : points) p.validate();

  EvalReport report;
  for (const auto& p : points) report.points.push_back({p, std::vector<SeedResult>(p.seeds.size())});

  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t s = 0; s < points[i].seeds.size(); ++s) tasks.push_back({i, s});
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      try {
        auto [i, s] = tasks[t];
        report.points[i].runs[s] = run_seed(points[i], points[i].seeds[s]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = tasks.size();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return report;
}

std::string EvalReport::csv() const {
  std::ostringstream os;
  os << "point,agents,sigma_p,sigma_r,strategy,k_ic,k_ir,budget_bytes,heatmaps,seeds,ap30,ap50,ap70,mean_bytes,comm_log2\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const PointResult& p = points[i];
    const ExperimentConfig& c = p.config;
    const double bytes = p.mean_bytes();
    os << i << ',' << c.agents << ',' << fmt(c.noise.sigma_p, 2) << ',' << fmt(c.noise.sigma_r, 2) << ',' << c.strategy << ',' << c.collab.k_ic << ','
       << join_ints(c.collab.k_ir) << ',' << budget_text(c.budget_bytes) << ',' << heatmap_text(c.heatmaps) << ','
       << p.runs.size() << ',' << fmt(p.mean_ap(0)) << ',' << fmt(p.mean_ap(1)) << ',' << fmt(p.mean_ap(2)) << ','
       << fmt(bytes, 1) << ',' << (bytes > 0.0 ? fmt(std::log2(bytes), 2) : "NA") << '\n';
  }
  return os.str();
}

std::string EvalReport::runs_csv() const {
  std::ostringstream os;
  os << "point,seed,ground_truth,detections,occluded,occluded_recall30,ap30,ap50,ap70,bytes\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (const SeedResult& r : points[i].runs) {
      os << i << ',' << r.seed << ',' << r.ground_truth.size() << ',' << r.detections.size() << ','
         << r.occluded.size() << ',' << fmt(r.occluded_recall) << ',' << fmt(r.ap[0]) << ',' << fmt(r.ap[1]) << ','
         << fmt(r.ap[2]) << ',' << r.ledger.total() << '\n';
    }
  }
  return os.str();
}

std::string EvalReport::summary() const {
  std::ostringstream os;
  os << "points: " << points.size() << '\n';
  for (std::size_t i = 0; i < points.size(); ++i) {
    const PointResult& p = points[i];
    const ExperimentConfig& c = p.config;
    const double bytes = p.mean_bytes();
    os << "\n[point " << i << "]\n"
       << "agents: " << c.agents << '\n'
       << "sigma_p: " << fmt(c.noise.sigma_p, 2) << '\n'
       << "sigma_r: " << fmt(c.noise.sigma_r, 2) << '\n'
       << "strategy: " << c.strategy << '\n'
       << "k_ic: " << c.collab.k_ic << '\n'
       << "k_ir: " << join_ints(c.collab.k_ir) << '\n'
       << "scales: " << c.collab.scales << '\n'
       << "budget_bytes: " << budget_text(c.budget_bytes) << '\n'
       << "heatmaps: " << heatmap_text(c.heatmaps) << '\n'
       << "grid: " << c.grid.describe() << '\n'
       << "seeds:";
    for (const auto& r : p.runs) os << ' ' << r.seed;
    os << '\n'
       << "ap30: " << fmt(p.mean_ap(0)) << '\n'
       << "ap50: " << fmt(p.mean_ap(1)) << '\n'
       << "ap70: " << fmt(p.mean_ap(2)) << '\n'
       << "mean_bytes: " << fmt(bytes, 1) << '\n'
       << "comm_log2: " << (bytes > 0.0 ? fmt(std::log2(bytes), 2) : "NA") << '\n';
  }
  return os.str();
}

std::string EvalReport::ledger_tsv() const {
  std::ostringstream os;
  os << "point\tseed\tround\tsender\treceiver\tkind\tscale\trecords\tbytes\tlog2_bytes\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (const SeedResult& r : points[i].runs) {
      std::istringstream rows(r.ledger.to_tsv());
      std::string line;
      std::getline(rows, line);
      while (std::getline(rows, line)) os << i << '\t' << r.seed << '\t' << line << '\n';
    }
  }
  return os.str();
}

std::string EvalReport::drops_tsv() const {
  std::ostringstream os;
  os << "point\tseed\tround\tsender\treceiver\tkind\tscale\tbytes\treason\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (const SeedResult& r : points[i].runs) {
      std::istringstream rows(r.ledger.drops_tsv());
      std::string line;
      std::getline(rows, line);
      while (std::getline(rows, line)) os << i << '\t' << r.seed << '\t' << line << '\n';
    }
  }
  return os.str();
}

std::string EvalReport::ground_truth_csv() const {
  std::ostringstream os;
  os << "point,seed,index,x,y,length,width,yaw_deg,ego_occluded\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (const SeedResult& r : points[i].runs) {
      for (std::size_t g = 0; g < r.ground_truth.size(); ++g) {
        const BevBox& b = r.ground_truth[g];
        const bool occ = std::find(r.occluded.begin(), r.occluded.end(), int(g)) != r.occluded.end();
        os << i << ',' << r.seed << ',' << g << ',' << fmt(b.x, 3) << ',' << fmt(b.y, 3) << ',' << fmt(b.length, 3)
           << ',' << fmt(b.width, 3) << ',' << fmt(b.yaw_deg, 3) << ',' << (occ ? 1 : 0) << '\n';
      }
    }
  }
  return os.str();
}

std::string EvalReport::detections_csv() const {
  std::ostringstream os;
  os << "point,seed,rank,x,y,length,width,yaw_deg,score\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (const SeedResult& r : points[i].runs) {
      for (std::size_t d = 0; d < r.detections.size(); ++d) {
        const Detection& det = r.detections[d];
        os << i << ',' << r.seed << ',' << d << ',' << fmt(det.box.x, 3) << ',' << fmt(det.box.y, 3) << ','
           << fmt(det.box.length, 3) << ',' << fmt(det.box.width, 3) << ',' << fmt(det.box.yaw_deg, 3) << ','
           << fmt(det.score, 6) << '\n';
      }
    }
  }
  return os.str();
}

}  // namespace copercept
