// Command-line runner for the competitive Yamabe experiments.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "yamabe/app.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Competitive Yamabe system on S^m under O(n1) x O(n2)"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> grid;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides output_dir)");
  app.add_option("--seed", seed, "random seed (overrides solver.seed)");
  app.add_option("--grid", grid, "number of grid cells N (overrides grid_N)");

  std::string command;
  auto add = [&](const char* name, const char* help, const char* key) {
    app.add_subcommand(name, help)->callback([&command, key] { command = key; });
  };
  add("single", "scalar Yamabe minimization (ell = 1)", "single");
  add("solve", "minimize the system at one lambda", "solve");
  add("sweep", "lambda continuation with partition and sign-changing analysis", "sweep");
  add("dirichlet", "least energy on an interval with zero interior boundary values", "dirichlet");
  add("oracle", "brute-force optimal interface scan for ell = 2", "oracle");
  add("selftest", "run the invariant suites", "selftest");
  CLI::App* sync = app.add_subcommand("sync", "fully synchronized solutions");
  sync->require_subcommand(1);
  sync->add_subcommand("solve", "multistart Newton for the multiplier system")->callback([&] { command = "sync_solve"; });
  sync->add_subcommand("threshold", "existence scan over lambda for ell = 2")->callback([&] {
    command = "sync_threshold";
  });

  CLI11_PARSE(app, argc, argv);

  yamabe::CommandContext ctx;
  try {
    if (!config_path.empty()) ctx.config = yamabe::load_config(config_path);
    if (out_dir) ctx.config.output_dir = *out_dir;
    if (seed) ctx.config.solver.seed = *seed;
    if (grid) ctx.config.grid_N = *grid;
    return yamabe::run_command(command, ctx);
  } catch (const yamabe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return yamabe::kExitConfig;
  } catch (const yamabe::SchemaError& e) {
    std::cerr << "output check failed: " << e.what() << '\n';
    return yamabe::kExitCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return yamabe::kExitError;
  }
}
