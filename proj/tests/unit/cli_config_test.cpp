#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "copercept/cli/config.hpp"
#include "copercept/cli/selftest.hpp"
#include "copercept/core/error.hpp"

using namespace copercept;
namespace fs = std::filesystem;

namespace {

std::string field_of(const std::string& yaml, const fs::path& base = ".") {
  try {
    parse_run_config(yaml, base).validate();
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

fs::path temp_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("copercept_cfg_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(RunConfig, EmptyTextGivesDefaults) {
  const RunConfig rc = parse_run_config("");
  EXPECT_EQ(rc.experiment.agents, 2);
  EXPECT_EQ(rc.experiment.strategy, "m1");
  EXPECT_TRUE(rc.sweep.empty());
  EXPECT_NO_THROW(rc.validate());
}

TEST(RunConfig, ReadsEveryField) {
  const RunConfig rc = parse_run_config(R"(
seeds: {start: 5, count: 3}
grid: {h: 32, w: 32, l: 8, channels: 16, cell_size: 0.5, z_size: 0.5}
scene: {generate: {agents: 4, boxes: 3}}
agents: 3
mix_voxel: {strategy: m3}
collab: {k_ic: 12, k_ir: "60/30/15", scales: 3, heatmap: oracle, pos_encoding: false}
hmf: {window: 3, mlp_layers: 2}
comms: {budget: 5000, comm_range: 40, shuffle_seed: 9}
noise: {sigma: 0.2, seed: 4}
decode: {threshold: 0.4, nms: false}
output: out_dir
jobs: 2
sweep: {noise: [0, 0.2], k_ir: ["100/50/25", [50, 25, 12]]}
)");
  const ExperimentConfig& e = rc.experiment;
  EXPECT_EQ(e.seeds, (std::vector<std::uint64_t>{5, 6, 7}));
  EXPECT_EQ(e.grid.h_cells, 32);
  EXPECT_DOUBLE_EQ(e.grid.cell_size_m, 0.5);
  EXPECT_EQ(e.scene_params.agent_count, 4);
  EXPECT_EQ(e.agents, 3);
  EXPECT_EQ(e.strategy, "m3");
  EXPECT_EQ(e.collab.k_ic, 12);
  EXPECT_EQ(e.collab.k_ir, (std::vector<int>{60, 30, 15}));
  EXPECT_EQ(e.heatmaps, HeatmapSource::kOracle);
  EXPECT_FALSE(e.collab.pos_encoding);
  EXPECT_EQ(e.hmf_window, 3);
  EXPECT_EQ(e.mlp_layers, 2);
  EXPECT_EQ(e.budget_bytes, std::optional<std::size_t>(5000));
  EXPECT_EQ(e.comm_range_m, std::optional<double>(40.0));
  EXPECT_DOUBLE_EQ(e.noise.sigma_p, 0.2);
  EXPECT_DOUBLE_EQ(e.noise.sigma_r, 0.2);
  EXPECT_EQ(e.noise.seed, 4u);
  EXPECT_DOUBLE_EQ(e.decode.threshold, 0.4);
  EXPECT_FALSE(e.decode.nms);
  EXPECT_EQ(rc.output_dir, std::optional<fs::path>("out_dir"));
  EXPECT_EQ(rc.jobs, 2);
  ASSERT_EQ(rc.sweep.k_ir.size(), 2u);
  EXPECT_EQ(rc.sweep.k_ir[1], (std::vector<int>{50, 25, 12}));
  EXPECT_EQ(rc.sweep.expand(e).size(), 4u);
  EXPECT_NO_THROW(rc.validate());
}

TEST(RunConfig, ErrorsNameTheField) {
  EXPECT_EQ(field_of("agnets: 2"), "agnets");
  EXPECT_EQ(field_of("collab: {k_ics: 2}"), "collab.k_ics");
  EXPECT_EQ(field_of("collab: {k_ir: \"100/x/25\"}"), "collab.k_ir");
  EXPECT_EQ(field_of("collab: {heatmap: magic}"), "collab.heatmap");
  EXPECT_EQ(field_of("comms: {budget: -1}"), "comms.budget");
  EXPECT_EQ(field_of("grid: {h: zero}"), "grid.h");
  EXPECT_EQ(field_of("grid: {h: 0}"), "grid");
  EXPECT_EQ(field_of("mix_voxel: {strategy: m7}"), "mix_voxel.strategy");
  EXPECT_EQ(field_of("hmf: {window: 2}"), "hmf.window");
  EXPECT_EQ(field_of("agents: 5"), "agents");
  EXPECT_EQ(field_of("seed: 1\nseeds: [1, 2]"), "seeds");
  EXPECT_EQ(field_of("jobs: 0"), "jobs");
  EXPECT_EQ(field_of("sweep: {strategy: [m1, bad]}"), "mix_voxel.strategy");
  EXPECT_EQ(field_of("decode: {threshold: 2}"), "decode.threshold");
  EXPECT_EQ(field_of("[1, 2"), "config");
}

TEST(RunConfig, ReferencedFilesMustExist) {
  EXPECT_EQ(field_of("scenario: no_such_file.yaml"), "scenario");
  EXPECT_EQ(field_of("weights: no_such_file.bin"), "weights");
  EXPECT_THROW(load_run_config("no_such_config.yaml"), ConfigError);
}

TEST(RunConfig, ScenarioPathIsRelativeToTheConfig) {
  const fs::path d = temp_dir("relative");
  fs::create_directories(d / "scenes");
  std::ofstream(d / "scenes" / "s.yaml") << "seed: 11\ngenerate: {agents: 3, boxes: 2}\nnoise: {sigma_p: 0.1}\n";
  std::ofstream(d / "run.yaml") << "scenario: scenes/s.yaml\nagents: 3\n";
  const RunConfig rc = load_run_config(d / "run.yaml");
  EXPECT_EQ(rc.scenario_path, d / "scenes" / "s.yaml");
  EXPECT_EQ(rc.experiment.seeds, (std::vector<std::uint64_t>{11}));
  EXPECT_EQ(rc.experiment.scene_params.agent_count, 3);
  EXPECT_DOUBLE_EQ(rc.experiment.noise.sigma_p, 0.1);
  EXPECT_NO_THROW(rc.validate());
}

TEST(RunConfig, LaterKeysOverrideTheScenario) {
  const fs::path d = temp_dir("override");
  std::ofstream(d / "s.yaml") << "seed: 11\nnoise: {sigma_p: 0.1}\n";
  const RunConfig rc = parse_run_config("scenario: s.yaml\nseed: 3\nnoise: {sigma_p: 0.4}\n", d);
  EXPECT_EQ(rc.experiment.seeds, (std::vector<std::uint64_t>{3}));
  EXPECT_DOUBLE_EQ(rc.experiment.noise.sigma_p, 0.4);
}

TEST(RunConfig, ListParsers) {
  EXPECT_EQ(parse_schedule("100/50/25", "f"), (std::vector<int>{100, 50, 25}));
  EXPECT_EQ(parse_schedule("1,2,3", "f"), (std::vector<int>{1, 2, 3}));
  EXPECT_THROW(parse_schedule("", "f"), ConfigError);
  EXPECT_THROW(parse_schedule("1.5", "f"), ConfigError);
  EXPECT_EQ(parse_number_list("0,0.2,0.4", "f"), (std::vector<double>{0.0, 0.2, 0.4}));
  EXPECT_THROW(parse_number_list("0,,1", "f"), ConfigError);
}

TEST(Selftest, AllChecksPass) {
  for (const CheckOutcome& c : run_selftest(3)) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
}
