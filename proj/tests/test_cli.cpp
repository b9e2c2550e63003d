#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "yamabe/app.hpp"

using namespace yamabe;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("yamabe_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

RunConfig small_config(const fs::path& out) {
  RunConfig c;
  c.grid_N = 128;
  c.scan_resolution = 8;
  c.output_dir = out.string();
  return c;
}

int run_quiet(const std::string& command, const RunConfig& c) {
  std::ostringstream sink;
  CommandContext ctx{c, &sink};
  return run_command(command, ctx);
}

int run_tool(const std::string& args) {
  const std::string cmd = std::string(YAMABE_CLI_PATH) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json manifest(const RunConfig& c, const std::string& command) {
  return json::parse(read_file(fs::path(c.output_dir) / ("MANIFEST_" + command + "_" + config_hash(c) + ".json")));
}

}  // namespace

TEST(Config, DefaultsAreValid) {
  EXPECT_NO_THROW(RunConfig{}.validate(true));
  const RunConfig c = config_from_json(json::object());
  EXPECT_EQ(c.grid_N, 1024);
  EXPECT_EQ(c.lambda_schedule.size(), 7u);
  EXPECT_EQ(c.lambda_schedule.back(), -4096.0);
}

TEST(Config, RoundTrip) {
  RunConfig c;
  c.n1 = 3;
  c.ell = 3;
  c.lambda_schedule = {-2, -8};
  c.solver.seed = 99;
  c.sync.lambda_grid = {0.5};
  const RunConfig d = config_from_json(to_json(c));
  EXPECT_EQ(to_json(c), to_json(d));
}

TEST(Config, RejectsInvalidDocuments) {
  EXPECT_THROW(config_from_json(json{{"grid", 10}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"solver", {{"tolerance", 1}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"ell", "two"}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"interval", {0.1}}}), ConfigError);

  RunConfig c;
  c.lambda_schedule = {-1, -1};
  EXPECT_THROW(c.validate(true), ConfigError);
  c.lambda_schedule = {-4, -1};
  EXPECT_THROW(c.validate(true), ConfigError);
  c.lambda_schedule = {1, -1};
  EXPECT_THROW(c.validate(true), ConfigError);

  c = RunConfig{};
  c.grid_N = 32;
  c.scan_resolution = 8;
  EXPECT_THROW(c.validate(true), ConfigError);
  EXPECT_NO_THROW(c.validate(false));

  c = RunConfig{};
  c.scan_resolution = 3;
  EXPECT_THROW(c.validate(true), ConfigError);
  c = RunConfig{};
  c.solver.backtrack = 2.0;
  EXPECT_THROW(c.validate(true), ConfigError);
}

TEST(Config, HashIgnoresOutputDirOnly) {
  RunConfig a, b;
  b.output_dir = "elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  b.solver.seed = 1;
  EXPECT_NE(config_hash(a), config_hash(b));
  b = a;
  b.grid_N = 2048;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Serialization, ProfileCsvRoundTrips) {
  const GridPtr g = build_grid(SphereGeometry::make(2, 2), 16);
  const Profile u = Profile::sample(g, [](double t) { return std::exp(t) / 3.0; });
  const std::string csv = profile_csv(u);
  EXPECT_NO_THROW(schema::check_csv(csv, "theta,value"));
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "theta,value");
  for (std::size_t k = 0; std::getline(in, line); ++k) {
    const auto comma = line.find(',');
    EXPECT_EQ(std::stod(line.substr(0, comma)), g->nodes[k]);
    EXPECT_EQ(std::stod(line.substr(comma + 1)), u[k]);
  }
}

TEST(Serialization, SolveResultHasExactFields) {
  const GridPtr g = build_grid(SphereGeometry::make(2, 2), 64);
  SolverOptions o;
  o.max_iters = 3;
  const SolveResult r = minimize(initial_state(g, CouplingMatrix::uniform(2, -2.0)), o);
  json j = solve_result_json(r, {"a.csv", "b.csv"});
  EXPECT_NO_THROW(schema::check_solve_result(j));
  EXPECT_EQ(j.size(), 7u);
  EXPECT_EQ(j["coupling_integrals"].size(), 2u);
  j["extra"] = 1;
  EXPECT_THROW(schema::check_solve_result(j), SchemaError);
  j.erase("extra");
  j.erase("energy");
  EXPECT_THROW(schema::check_solve_result(j), SchemaError);
}

TEST(Serialization, CsvChecks) {
  EXPECT_THROW(schema::check_csv("a,b\n1,2\n", "theta,value"), SchemaError);
  EXPECT_THROW(schema::check_csv("theta,value\n1\n", "theta,value"), SchemaError);
  EXPECT_THROW(schema::check_csv("theta,value\n1,x\n", "theta,value"), SchemaError);
  EXPECT_THROW(schema::check_csv("theta,value\n", "theta,value"), SchemaError);
  EXPECT_NO_THROW(schema::check_csv("lambda,count,degenerate\n-2,0,0\n", "lambda,count,degenerate"));
}

TEST(Serialization, PartitionJson) {
  const GridPtr g = build_grid(SphereGeometry::make(2, 2), 128);
  const Profile u = Profile::sample(g, [](double t) { return std::max(0.0, 0.7 - t); });
  const Profile v = Profile::sample(g, [](double t) { return std::max(0.0, t - 0.8); });
  const json j = partition_json(extract_partition({u, v}));
  EXPECT_NO_THROW(schema::check_partition(j));
  EXPECT_EQ(j["intervals"].size(), 2u);
  EXPECT_EQ(j["interfaces"].size(), 1u);
}

TEST(Commands, SingleWritesCheckedArtifacts) {
  const RunConfig c = small_config(scratch_dir("single"));
  ASSERT_EQ(run_quiet("single", c), kExitOk);
  const json m = manifest(c, "single");
  EXPECT_EQ(m["state"], "complete");
  EXPECT_FALSE(m["config"].contains("output_dir"));
  for (const auto& f : m["files"]) {
    EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / f["name"].get<std::string>()));
    EXPECT_TRUE(f["validated"].get<bool>());
  }
  const std::string prefix = "single_" + config_hash(c);
  const json report = json::parse(read_file(fs::path(c.output_dir) / (prefix + "_report.json")));
  EXPECT_LE(report["relative_error"].get<double>(), 5e-3);
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / (prefix + ".timing.json")));
}

TEST(Commands, RepeatRunsAreByteIdentical) {
  RunConfig a = small_config(scratch_dir("det_a"));
  RunConfig b = small_config(scratch_dir("det_b"));
  a.lambda_schedule = b.lambda_schedule = {-1, -8, -64};
  for (const char* cmd : {"single", "sweep"}) {
    ASSERT_EQ(run_quiet(cmd, a), kExitOk);
    ASSERT_EQ(run_quiet(cmd, b), kExitOk);
  }
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(a.output_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.find(".timing.") != std::string::npos) continue;
    ASSERT_TRUE(fs::exists(fs::path(b.output_dir) / name)) << name;
    EXPECT_EQ(read_file(entry.path()), read_file(fs::path(b.output_dir) / name)) << name;
    ++compared;
  }
  EXPECT_GT(compared, 10);
}

TEST(Commands, SweepSeriesAndPartitions) {
  RunConfig c = small_config(scratch_dir("sweep"));
  c.lambda_schedule = {-1, -16, -256};
  ASSERT_EQ(run_quiet("sweep", c), kExitOk);
  const std::string prefix = "sweep_" + config_hash(c);
  const std::string series = read_file(fs::path(c.output_dir) / (prefix + "_series.csv"));
  EXPECT_EQ(std::count(series.begin(), series.end(), '\n'), 4);
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / (prefix + "_p2_partition.json")));
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / (prefix + "_sign_changing.csv")));
}

TEST(Commands, DirichletAndOracle) {
  RunConfig c = small_config(scratch_dir("dirichlet"));
  c.interval_lo = 0.0;
  c.interval_hi = std::numbers::pi / 4;
  ASSERT_EQ(run_quiet("dirichlet", c), kExitOk);
  ASSERT_EQ(run_quiet("oracle", c), kExitOk);
  const json o = json::parse(read_file(fs::path(c.output_dir) / ("oracle_" + config_hash(c) + ".json")));
  EXPECT_LE(std::abs(o["t_star"].get<double>() - std::numbers::pi / 4), o["cell"].get<double>());
}

TEST(Commands, DirichletIntervalMustBeOnNodes) {
  RunConfig c = small_config(scratch_dir("dirichlet_bad"));
  c.interval_hi = 0.5;
  EXPECT_THROW(run_quiet("dirichlet", c), std::invalid_argument);
  EXPECT_EQ(manifest(c, "dirichlet")["state"], "failed");
}

TEST(Commands, UnconvergedRunExitsNonzero) {
  RunConfig c = small_config(scratch_dir("noconv"));
  c.solver.max_iters = 1;
  EXPECT_EQ(run_quiet("solve", c), kExitNoConvergence);
  EXPECT_EQ(manifest(c, "solve")["state"], "failed");
}

TEST(Commands, SelftestPasses) {
  const RunConfig c = small_config(scratch_dir("selftest"));
  EXPECT_EQ(run_quiet("selftest", c), kExitOk);
}

TEST(Tool, SyncThresholdDefaultGrid) {
  const fs::path out = scratch_dir("tool_sync");
  ASSERT_EQ(run_tool("sync threshold --out " + out.string()), 0);
  RunConfig c;
  c.output_dir = out.string();
  const std::string csv = read_file(out / ("sync_threshold_" + config_hash(c) + ".csv"));
  EXPECT_EQ(csv,
            "lambda,count,degenerate\n-2,0,0\n-1.1000000000000001,0,0\n-1,0,0\n-0.90000000000000002,1,0\n"
            "-0.5,1,0\n0,1,0\n0.5,1,0\n2,1,0\n");
}

TEST(Tool, ConfigFileAndOverrides) {
  const fs::path out = scratch_dir("tool_cfg");
  write_file(out / "cfg.json", R"({"geometry": {"n1": 3, "n2": 2}, "grid_N": 64, "scan_resolution": 8})");
  EXPECT_EQ(run_tool("single --config " + (out / "cfg.json").string() + " --grid 128 --out " + out.string()), 0);
  RunConfig c = load_config((out / "cfg.json").string());
  c.grid_N = 128;
  c.output_dir = out.string();
  EXPECT_TRUE(fs::exists(out / ("single_" + config_hash(c) + ".json")));
}

TEST(Tool, ErrorsExitNonzero) {
  const fs::path out = scratch_dir("tool_err");
  write_file(out / "bad.json", R"({"lambda_schedule": [-4, -1]})");
  EXPECT_EQ(run_tool("sweep --config " + (out / "bad.json").string() + " --out " + out.string()), kExitConfig);
  write_file(out / "junk.json", "{not json");
  EXPECT_EQ(run_tool("single --config " + (out / "junk.json").string()), kExitConfig);
  EXPECT_EQ(run_tool("single --grid 32 --out " + out.string()), kExitConfig);
  EXPECT_NE(run_tool("nonsense"), 0);
  EXPECT_NE(run_tool(""), 0);
}

TEST(Config, ShippedExamplesAreValid) {
  int seen = 0;
  for (const auto& e : fs::directory_iterator(YAMABE_CONFIG_DIR)) {
    if (e.path().extension() != ".json") continue;
    const RunConfig c = load_config(e.path().string());
    EXPECT_NO_THROW(c.validate(true)) << e.path();
    ++seen;
  }
  EXPECT_GE(seen, 5);
}

TEST(Tool, DirichletExampleConfig) {
  const fs::path out = scratch_dir("tool_dirichlet");
  const std::string cfg = std::string(YAMABE_CONFIG_DIR) + "/dirichlet_half.json";
  ASSERT_EQ(run_tool("dirichlet --config " + cfg + " --grid 256 --out " + out.string()), 0);
  RunConfig c = load_config(cfg);
  c.grid_N = 256;
  c.output_dir = out.string();
  const json j = json::parse(read_file(out / ("dirichlet_" + config_hash(c) + ".json")));
  EXPECT_TRUE(j["converged"].get<bool>());
  EXPECT_GT(j["c_value"].get<double>(), 0.0);
}
