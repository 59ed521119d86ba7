#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "copercept/cli/config.hpp"
#include "copercept/cli/selftest.hpp"
#include "copercept/comms/message.hpp"
#include "copercept/core/error.hpp"
#include "copercept/eval/experiment.hpp"

using namespace copercept;
namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// Flags shared by `run` and `sweep`; unset flags leave config values alone.
struct Overrides {
  std::string config;
  std::string scenario;
  std::string weights;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::optional<int> seed_count;
  std::optional<std::string> strategy;
  std::optional<int> k_ic;
  std::optional<std::string> k_ir;
  std::optional<long long> budget;
  std::optional<double> sigma_p;
  std::optional<double> sigma_r;
  std::optional<std::string> heatmap;
  std::optional<double> comm_range;
  std::optional<int> jobs;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "YAML run config");
  cmd->add_option("--scenario", o.scenario, "scenario YAML (replaces the config's scene)");
  cmd->add_option("--weights", o.weights, "weight file");
  cmd->add_option("-o,--output", o.output, "output directory");
  cmd->add_option("--seed", o.seed, "first seed");
  cmd->add_option("--seeds", o.seed_count, "number of consecutive seeds");
  cmd->add_option("--budget", o.budget, "per-frame byte budget");
  cmd->add_option("--sigma-p", o.sigma_p, "position noise (m)");
  cmd->add_option("--sigma-r", o.sigma_r, "heading noise (deg)");
  cmd->add_option("--heatmap", o.heatmap, "learned or oracle");
  cmd->add_option("--comm-range", o.comm_range, "link range (m)");
  cmd->add_option("-j,--jobs", o.jobs, "worker threads");
}

RunConfig load(const Overrides& o) {
  RunConfig rc = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  ExperimentConfig& e = rc.experiment;
  if (!o.scenario.empty()) {
    rc.scenario_path = o.scenario;
    apply_scenario(e, o.scenario);
  }
  if (!o.weights.empty()) {
    rc.weights_path = o.weights;
    apply_weights(e, o.weights);
  }
  if (!o.output.empty()) rc.output_dir = o.output;
  if (o.seed || o.seed_count) {
    const std::uint64_t start = o.seed.value_or(o.seed_count ? 0 : e.seeds.front());
    const int count = o.seed_count.value_or(1);
    if (count < 1) throw ConfigError("seeds", "must be >= 1");
    e.seeds.clear();
    for (int i = 0; i < count; ++i) e.seeds.push_back(start + static_cast<std::uint64_t>(i));
  }
  if (o.strategy) e.strategy = *o.strategy;
  if (o.k_ic) e.collab.k_ic = *o.k_ic;
  if (o.k_ir) e.collab.k_ir = parse_schedule(*o.k_ir, "k_ir");
  if (o.budget) {
    if (*o.budget < 0) throw ConfigError("budget", "must be >= 0");
    e.budget_bytes = static_cast<std::size_t>(*o.budget);
  }
  if (o.sigma_p) e.noise.sigma_p = *o.sigma_p;
  if (o.sigma_r) e.noise.sigma_r = *o.sigma_r;
  if (o.heatmap) {
    if (*o.heatmap == "learned") {
      e.heatmaps = HeatmapSource::kLearned;
    } else if (*o.heatmap == "oracle") {
      e.heatmaps = HeatmapSource::kOracle;
    } else {
      throw ConfigError("heatmap", "must be 'learned' or 'oracle'");
    }
  }
  if (o.comm_range) e.comm_range_m = *o.comm_range;
  if (o.jobs) rc.jobs = *o.jobs;
  return rc;
}

fs::path output_dir(const RunConfig& rc) {
  if (rc.output_dir) return *rc.output_dir;
  if (const char* env = std::getenv("COPERCEPT_OUTPUT_DIR"); env && *env) return env;
  return "copercept_out";
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

void write_outputs(const EvalReport& r, const fs::path& dir, const std::string& report_name) {
  fs::create_directories(dir);
  write_file(dir / report_name, r.csv());
  write_file(dir / "runs.csv", r.runs_csv());
  write_file(dir / "summary.txt", r.summary());
  write_file(dir / "ledger.tsv", r.ledger_tsv());
  write_file(dir / "drops.tsv", r.drops_tsv());
  write_file(dir / "ground_truth.csv", r.ground_truth_csv());
  write_file(dir / "detections.csv", r.detections_csv());
}

int bandwidth_dense(long long h, long long w, long long c) {
  if (h < 1 || w < 1 || c < 1) throw ConfigError("bandwidth", "--h, --w and --c must be >= 1");
  std::printf("%.2f\n", dense_volume(h, w, c));
  return 0;
}

int bandwidth_config(const RunConfig& rc) {
  const BandwidthEstimate e = estimate_bandwidth(rc.experiment);
  std::printf("kind\tbytes\n");
  std::printf("voxel_prior\t%zu\nheatmap_share\t%zu\ninstance_query\t%zu\ninstance_reply\t%zu\ninstance_broadcast\t%zu\n",
              e.voxel_prior, e.heatmap, e.query, e.reply, e.broadcast);
  std::printf("total\t%zu\n", e.total());
  if (e.total() > 0) std::printf("log2\t%.2f\n", comm_volume(e.total()));
  std::printf("k_ic\t%d\n", e.plan.k_ic);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent collaborative perception simulator"};
  app.require_subcommand(1);

  Overrides run_o;
  std::optional<int> run_agents;
  CLI::App* run = app.add_subcommand("run", "evaluate one configuration");
  add_common(run, run_o);
  run->add_option("--agents", run_agents, "agents taking part");
  run->add_option("--strategy", run_o.strategy, "m1, m2, m3, none or off");
  run->add_option("--k-ic", run_o.k_ic, "completion queries per sender and scale");
  run->add_option("--k-ir", run_o.k_ir, "refinement schedule, e.g. 100/50/25");

  Overrides sweep_o;
  std::string sweep_agents, sweep_noise, sweep_strategy, sweep_kic, sweep_kir;
  CLI::App* sweep = app.add_subcommand("sweep", "evaluate a grid of configurations");
  add_common(sweep, sweep_o);
  sweep->add_option("--agents", sweep_agents, "comma-separated agent counts");
  sweep->add_option("--noise", sweep_noise, "comma-separated noise levels (m and deg)");
  sweep->add_option("--strategy", sweep_strategy, "comma-separated strategies");
  sweep->add_option("--k-ic", sweep_kic, "comma-separated K_IC values");
  sweep->add_option("--k-ir", sweep_kir, "comma-separated schedules, e.g. 100/50/25,50/25/12");

  Overrides bw_o;
  bool dense = false;
  long long dh = 0, dw = 0, dc = 0;
  std::optional<int> bw_agents;
  CLI::App* bw = app.add_subcommand("bandwidth", "byte accounting without simulation");
  bw->set_help_flag("--help", "print this help and exit");
  bw->add_flag("--dense", dense, "log2 bytes of a dense H x W x C float map");
  bw->add_option("--h", dh, "dense map height");
  bw->add_option("--w", dw, "dense map width");
  bw->add_option("--c", dc, "dense map channels");
  bw->add_option("--config", bw_o.config, "YAML run config");
  bw->add_option("--agents", bw_agents, "agents taking part");
  bw->add_option("--strategy", bw_o.strategy, "m1, m2, m3, none or off");
  bw->add_option("--k-ic", bw_o.k_ic, "completion queries per sender and scale");
  bw->add_option("--k-ir", bw_o.k_ir, "refinement schedule");
  bw->add_option("--budget", bw_o.budget, "per-frame byte budget");

  std::uint64_t selftest_seed = 1;
  CLI::App* st = app.add_subcommand("selftest", "run the invariant suite");
  st->add_option("--seed", selftest_seed, "fuzz seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (*bw) {
      if (dense) return bandwidth_dense(dh, dw, dc);
      RunConfig rc = load(bw_o);
      if (bw_agents) {
        rc.experiment.agents = *bw_agents;
        rc.experiment.scene_params.agent_count = std::max(rc.experiment.scene_params.agent_count, *bw_agents);
      }
      rc.validate();
      return bandwidth_config(rc);
    }
    if (*st) {
      bool ok = true;
      for (const CheckOutcome& c : run_selftest(selftest_seed)) {
        std::printf("%s %s: %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
        ok = ok && c.passed;
      }
      return ok ? 0 : kExitRuntime;
    }
    if (*run) {
      RunConfig rc = load(run_o);
      if (run_agents) {
        rc.experiment.agents = *run_agents;
        if (!rc.experiment.scene) {
          rc.experiment.scene_params.agent_count = std::max(rc.experiment.scene_params.agent_count, *run_agents);
        }
      }
      rc.sweep = {};
      rc.validate();
      const EvalReport r = run_experiment(rc.experiment, {}, rc.jobs);
      const fs::path dir = output_dir(rc);
      write_outputs(r, dir, "report.csv");
      std::cout << r.summary();
      return 0;
    }
    RunConfig rc = load(sweep_o);
    if (!sweep_agents.empty()) {
      rc.sweep.agents = parse_schedule(sweep_agents, "agents");
    }
    if (!sweep_noise.empty()) rc.sweep.noise = parse_number_list(sweep_noise, "noise");
    if (!sweep_strategy.empty()) {
      rc.sweep.strategy.clear();
      std::stringstream ss(sweep_strategy);
      for (std::string t; std::getline(ss, t, ',');) rc.sweep.strategy.push_back(t);
    }
    if (!sweep_kic.empty()) {
      rc.sweep.k_ic = parse_schedule(sweep_kic, "k_ic");
    }
    if (!sweep_kir.empty()) {
      rc.sweep.k_ir.clear();
      std::stringstream ss(sweep_kir);
      for (std::string t; std::getline(ss, t, ',');) rc.sweep.k_ir.push_back(parse_schedule(t, "k_ir"));
    }
    if (!rc.experiment.scene) {
      for (int a : rc.sweep.agents) {
        rc.experiment.scene_params.agent_count = std::max(rc.experiment.scene_params.agent_count, a);
      }
    }
    rc.validate();
    const EvalReport r = run_experiment(rc.experiment, rc.sweep, rc.jobs);
    write_outputs(r, output_dir(rc), "sweep.csv");
    std::cout << r.summary();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
