#include "copercept/cli/config.hpp"

#include <fstream>
#include <sstream>

#include "../yaml_util.hpp"
#include "copercept/sim/scenario.hpp"

namespace copercept {

namespace {

namespace fs = std::filesystem;

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

void require_file(const fs::path& p, const std::string& field) {
  if (!fs::is_regular_file(p)) throw ConfigError(field, "file not found: " + p.string());
}

std::vector<std::uint64_t> parse_seeds(const YAML::Node& n) {
  if (n.IsMap()) {
    yaml::check_keys(n, "seeds", {"start", "count"});
    std::uint64_t start = 0;
    int count = 1;
    yaml::read(n, "start", "seeds", start);
    yaml::read(n, "count", "seeds", count);
    if (count < 1) throw ConfigError("seeds.count", "must be >= 1");
    std::vector<std::uint64_t> out;
    for (int i = 0; i < count; ++i) out.push_back(start + static_cast<std::uint64_t>(i));
    return out;
  }
  return yaml::as_list<std::uint64_t>(n, "seeds");
}

std::vector<int> schedule_node(const YAML::Node& n, const std::string& field) {
  if (n.IsScalar()) return parse_schedule(n.as<std::string>(), field);
  return yaml::as_list<int>(n, field);
}

HeatmapSource parse_heatmaps(const std::string& s, const std::string& field) {
  if (s == "learned") return HeatmapSource::kLearned;
  if (s == "oracle") return HeatmapSource::kOracle;
  throw ConfigError(field, "must be 'learned' or 'oracle'");
}

void parse_sweep(const YAML::Node& n, SweepSpec& s) {
  yaml::check_keys(n, "sweep", {"agents", "noise", "strategy", "k_ic", "k_ir"});
  if (n["agents"]) s.agents = yaml::as_list<int>(n["agents"], "sweep.agents");
  if (n["noise"]) s.noise = yaml::as_list<double>(n["noise"], "sweep.noise");
  if (n["strategy"]) s.strategy = yaml::as_list<std::string>(n["strategy"], "sweep.strategy");
  if (n["k_ic"]) s.k_ic = yaml::as_list<int>(n["k_ic"], "sweep.k_ic");
  if (const YAML::Node k = n["k_ir"]) {
    if (k.IsScalar()) {
      s.k_ir.push_back(schedule_node(k, "sweep.k_ir"));
    } else if (k.IsSequence()) {
      for (std::size_t i = 0; i < k.size(); ++i) {
        s.k_ir.push_back(schedule_node(k[i], "sweep.k_ir[" + std::to_string(i) + "]"));
      }
    } else {
      throw ConfigError("sweep.k_ir", "must be a schedule or a list of schedules");
    }
  }
}

}  // namespace

std::vector<int> parse_schedule(const std::string& text, const std::string& field) {
  std::vector<int> out;
  std::string token;
  std::stringstream ss(text);
  while (std::getline(ss, token, text.find('/') != std::string::npos ? '/' : ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError(field, "'" + token + "' is not an integer");
    }
  }
  if (out.empty()) throw ConfigError(field, "is empty");
  return out;
}

std::vector<double> parse_number_list(const std::string& text, const std::string& field) {
  std::vector<double> out;
  std::string token;
  std::stringstream ss(text);
  while (std::getline(ss, token, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError(field, "'" + token + "' is not a number");
    }
  }
  if (out.empty()) throw ConfigError(field, "is empty");
  return out;
}

void apply_scenario(ExperimentConfig& cfg, const fs::path& path) {
  require_file(path, "scenario");
  const Scenario s = load_scenario(path);
  cfg.scene = s.scene;
  cfg.scene_params = s.params;
  if (s.noise) cfg.noise = *s.noise;
  if (s.seed) cfg.seeds = {*s.seed};
}

void apply_weights(ExperimentConfig& cfg, const fs::path& path) {
  require_file(path, "weights");
  try {
    cfg.weights = WeightSet::load(path);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("weights", e.what());
  }
}

void RunConfig::validate() const {
  experiment.validate();
  if (jobs < 1) throw ConfigError("jobs", "must be >= 1");
  for (const ExperimentConfig& c : sweep.expand(experiment)) c.validate();
}

RunConfig parse_run_config(const std::string& text, const fs::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("config", std::string("not valid YAML: ") + e.what());
  }
  RunConfig rc;
  if (!root || root.IsNull()) return rc;
  yaml::check_keys(root, "", {"seed", "seeds", "scenario", "scene", "grid", "agents", "mix_voxel", "collab", "hmf",
                              "comms", "noise", "decode", "weights", "output", "jobs", "sweep"});
  ExperimentConfig& e = rc.experiment;

  if (const YAML::Node n = root["scenario"]) {
    rc.scenario_path = resolve(base_dir, yaml::as<std::string>(n, "scenario"));
    apply_scenario(e, *rc.scenario_path);
  }
  if (const YAML::Node n = root["scene"]) {
    const Scenario s = parse_scenario(YAML::Dump(n));
    if (s.scene) e.scene = s.scene;
    e.scene_params = s.params;
    if (s.noise) e.noise = *s.noise;
    if (s.seed) e.seeds = {*s.seed};
  }
  if (root["seed"] && root["seeds"]) throw ConfigError("seeds", "give either seed or seeds");
  if (const YAML::Node n = root["seed"]) e.seeds = {yaml::as<std::uint64_t>(n, "seed")};
  if (const YAML::Node n = root["seeds"]) e.seeds = parse_seeds(n);

  if (const YAML::Node g = root["grid"]) {
    yaml::check_keys(g, "grid", {"h", "w", "l", "channels", "cell_size", "z_size"});
    yaml::read(g, "h", "grid", e.grid.h_cells);
    yaml::read(g, "w", "grid", e.grid.w_cells);
    yaml::read(g, "l", "grid", e.grid.l_bins);
    yaml::read(g, "channels", "grid", e.grid.channels);
    yaml::read(g, "cell_size", "grid", e.grid.cell_size_m);
    yaml::read(g, "z_size", "grid", e.grid.z_size_m);
  }
  yaml::read(root, "agents", "", e.agents);
  if (const YAML::Node m = root["mix_voxel"]) {
    yaml::check_keys(m, "mix_voxel", {"strategy"});
    yaml::read(m, "strategy", "mix_voxel", e.strategy);
  }
  if (const YAML::Node c = root["collab"]) {
    yaml::check_keys(c, "collab", {"k_ic", "k_ir", "scales", "heatmap", "pos_encoding"});
    yaml::read(c, "k_ic", "collab", e.collab.k_ic);
    if (c["k_ir"]) e.collab.k_ir = schedule_node(c["k_ir"], "collab.k_ir");
    yaml::read(c, "scales", "collab", e.collab.scales);
    yaml::read(c, "pos_encoding", "collab", e.collab.pos_encoding);
    if (c["heatmap"]) e.heatmaps = parse_heatmaps(yaml::as<std::string>(c["heatmap"], "collab.heatmap"), "collab.heatmap");
  }
  if (const YAML::Node h = root["hmf"]) {
    yaml::check_keys(h, "hmf", {"window", "mlp_layers"});
    yaml::read(h, "window", "hmf", e.hmf_window);
    yaml::read(h, "mlp_layers", "hmf", e.mlp_layers);
  }
  if (const YAML::Node c = root["comms"]) {
    yaml::check_keys(c, "comms", {"budget", "comm_range", "shuffle_seed"});
    if (c["budget"]) {
      const auto b = yaml::as<long long>(c["budget"], "comms.budget");
      if (b < 0) throw ConfigError("comms.budget", "must be >= 0");
      e.budget_bytes = static_cast<std::size_t>(b);
    }
    if (c["comm_range"]) e.comm_range_m = yaml::as<double>(c["comm_range"], "comms.comm_range");
    if (c["shuffle_seed"]) e.shuffle_seed = yaml::as<std::uint64_t>(c["shuffle_seed"], "comms.shuffle_seed");
  }
  if (const YAML::Node n = root["noise"]) {
    yaml::check_keys(n, "noise", {"sigma", "sigma_p", "sigma_r", "seed"});
    if (const YAML::Node s = n["sigma"]) {
      const double v = yaml::as<double>(s, "noise.sigma");
      e.noise.sigma_p = v;
      e.noise.sigma_r = v;
    }
    yaml::read(n, "sigma_p", "noise", e.noise.sigma_p);
    yaml::read(n, "sigma_r", "noise", e.noise.sigma_r);
    yaml::read(n, "seed", "noise", e.noise.seed);
  }
  if (const YAML::Node d = root["decode"]) {
    yaml::check_keys(d, "decode", {"threshold", "nms", "length", "width"});
    yaml::read(d, "threshold", "decode", e.decode.threshold);
    yaml::read(d, "nms", "decode", e.decode.nms);
    yaml::read(d, "length", "decode", e.decode.length);
    yaml::read(d, "width", "decode", e.decode.width);
  }
  if (const YAML::Node n = root["weights"]) {
    rc.weights_path = resolve(base_dir, yaml::as<std::string>(n, "weights"));
    apply_weights(e, *rc.weights_path);
  }
  if (const YAML::Node n = root["output"]) rc.output_dir = fs::path(yaml::as<std::string>(n, "output"));
  yaml::read(root, "jobs", "", rc.jobs);
  if (const YAML::Node s = root["sweep"]) parse_sweep(s, rc.sweep);
  return rc;
}

RunConfig load_run_config(const fs::path& path) {
  require_file(path, "config");
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

}  // namespace copercept
