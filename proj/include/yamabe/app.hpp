#pragma once

/// \file
/// The experiment commands behind the command-line tool. Each command reads
/// a validated RunConfig, writes its artifacts under names derived from the
/// config hash, checks every file it wrote, and records the outcome in a
/// manifest. Wall-clock time goes to a separate timing file so that the
/// remaining artifacts are reproducible byte for byte.

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "yamabe/analysis.hpp"
#include "yamabe/config.hpp"
#include "yamabe/io.hpp"
#include "yamabe/random_state.hpp"
#include "yamabe/sync.hpp"

namespace yamabe {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitNoConvergence = 3,
  kExitCheckFailed = 4,
  kExitError = 5,
};

/// Writes artifacts named `<command>_<hash><suffix>` and keeps the manifest.
class ArtifactWriter {
 public:
  ArtifactWriter(std::string command, const RunConfig& config)
      : dir_(config.output_dir), prefix_(command + "_" + config_hash(config)) {
    std::filesystem::create_directories(dir_);
    manifest_ = {{"command", command},
                 {"config_hash", config_hash(config)},
                 {"config", to_json(config)},
                 {"files", json::array()},
                 {"state", "running"}};
    manifest_["config"].erase("output_dir");
    flush();
  }

  const std::string& prefix() const { return prefix_; }
  std::filesystem::path path(const std::string& name) const { return dir_ / name; }

  std::string write_json(const std::string& suffix, const json& j,
                         const std::function<void(const json&)>& check = {}) {
    const std::string name = prefix_ + suffix + ".json";
    write_file(path(name), dump_json(j));
    if (check) check(json::parse(read_file(path(name))));
    record(name, "json");
    return name;
  }

  std::string write_csv(const std::string& suffix, const std::string& text, const std::string& header) {
    const std::string name = prefix_ + suffix + ".csv";
    write_file(path(name), text);
    schema::check_csv(read_file(path(name)), header);
    record(name, "csv");
    return name;
  }

  static std::filesystem::path manifest_path(const std::string& command, const RunConfig& config) {
    return std::filesystem::path(config.output_dir) / ("MANIFEST_" + command + "_" + config_hash(config) + ".json");
  }

  static void write_timing(const std::string& command, const RunConfig& config, double seconds) {
    const std::filesystem::path p =
        std::filesystem::path(config.output_dir) / (command + "_" + config_hash(config) + ".timing.json");
    write_file(p, dump_json(json{{"wall_seconds", seconds}}));
  }

  void finish(const std::string& state, const std::string& message = "") {
    manifest_["state"] = state;
    if (!message.empty()) manifest_["message"] = message;
    flush();
  }

 private:
  void record(const std::string& name, const char* kind) {
    manifest_["files"].push_back({{"name", name}, {"kind", kind}, {"validated", true}});
    flush();
  }
  void flush() const { write_file(dir_ / ("MANIFEST_" + prefix_ + ".json"), dump_json(manifest_)); }

  std::filesystem::path dir_;
  std::string prefix_;
  json manifest_;
};

namespace detail {

inline std::vector<std::string> write_components(ArtifactWriter& out, const std::string& tag,
                                                 const SystemState& state) {
  std::vector<std::string> names;
  for (int i = 0; i < state.ell(); ++i) {
    names.push_back(out.write_csv(tag + "_u" + std::to_string(i), profile_csv(state.components[i]), "theta,value"));
  }
  return names;
}

inline std::string write_solve(ArtifactWriter& out, const std::string& tag, const SolveResult& r) {
  const auto comps = write_components(out, tag, r.state);
  return out.write_json(tag, solve_result_json(r, comps), schema::check_solve_result);
}

/// Sum over i < j of the integral of |u_i|^{2*/2} |u_j|^{2*/2}.
inline double total_coupling(const SolveResult& r) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < r.coupling_integrals.rows(); ++i)
    for (Eigen::Index j = i + 1; j < r.coupling_integrals.cols(); ++j) s += r.coupling_integrals(i, j);
  return s;
}

inline double min_norm_squared(const SolveResult& r) {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& u : r.state.components) lo = std::min(lo, norm_g_squared(u));
  return lo;
}

inline double max_mismatch(const Partition& p) {
  double worst = 0.0;
  for (const auto& d : reflection_check(p)) worst = std::max(worst, d.relative_mismatch);
  return worst;
}

/// (1/m) (m(m-2)/4)^{m/2} Vol(S^m), the energy of the constant solution.
inline double constant_solution_energy(const SphereGeometry& g) {
  return std::pow(g.conformal_coeff, 0.5 * g.m) * sphere_volume(g) / g.m;
}

inline void require_keys(const json& j, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    if (!j.contains(k)) throw SchemaError(std::string("report is missing '") + k + "'");
  }
}

}  // namespace detail

struct CommandContext {
  RunConfig config;
  std::ostream* log = &std::cerr;
};

inline int run_single(const CommandContext& ctx) {
  const RunConfig& c = ctx.config;
  ArtifactWriter out("single", c);
  const SphereGeometry geo = SphereGeometry::make(c.n1, c.n2);
  const GridPtr grid = build_grid(geo, c.grid_N);
  const SolveResult r = minimize(initial_state(grid, CouplingMatrix::uniform(1, 0.0)), c.solver);
  detail::write_solve(out, "", r);

  const double ref = detail::constant_solution_energy(geo);
  const double level = std::pow(geo.conformal_coeff, 0.25 * (geo.m - 2));
  double deviation = 0.0;
  for (double x : r.state.components[0].values) deviation = std::max(deviation, std::abs(x - level) / level);
  json report{{"n1", c.n1},
              {"n2", c.n2},
              {"m", geo.m},
              {"grid_N", c.grid_N},
              {"status", to_string(r.status)},
              {"energy", r.energy},
              {"reference_energy", ref},
              {"relative_error", std::abs(r.energy - ref) / ref},
              {"constant_level", level},
              {"max_relative_deviation_from_constant", deviation},
              {"yamabe_residual", yamabe_residual(r.state.components[0], c.tau)}};
  out.write_json("_report", report, [](const json& j) {
    detail::require_keys(j, {"energy", "reference_energy", "relative_error", "yamabe_residual"});
  });
  *ctx.log << "single: energy " << format_double(r.energy) << " (" << to_string(r.status) << ")\n";
  out.finish(r.converged ? "complete" : "failed", r.converged ? "" : "minimization did not converge");
  return r.converged ? kExitOk : kExitNoConvergence;
}

inline int run_solve(const CommandContext& ctx) {
  const RunConfig& c = ctx.config;
  ArtifactWriter out("solve", c);
  const GridPtr grid = build_grid(SphereGeometry::make(c.n1, c.n2), c.grid_N);
  const SolveResult r = minimize(initial_state(grid, CouplingMatrix::uniform(c.ell, c.lambda)), c.solver);
  detail::write_solve(out, "", r);
  if (c.ell >= 2) out.write_json("_partition", partition_json(extract_partition(r, c.tau)), schema::check_partition);
  *ctx.log << "solve: lambda " << c.lambda << " energy " << format_double(r.energy) << " (" << to_string(r.status)
           << ")\n";
  out.finish(r.converged ? "complete" : "failed", r.converged ? "" : "minimization did not converge");
  return r.converged ? kExitOk : kExitNoConvergence;
}

inline int run_sweep(const CommandContext& ctx) {
  const RunConfig& c = ctx.config;
  if (c.ell < 2) throw ConfigError("sweep needs ell >= 2");
  ArtifactWriter out("sweep", c);
  const GridPtr grid = build_grid(SphereGeometry::make(c.n1, c.n2), c.grid_N);
  const std::vector<SolveResult> results = sweep(grid, c.ell, c.lambda_schedule, c.solver);

  std::string series =
      "lambda,energy,coupling_integral,lambda_coupling,min_norm_squared,coverage,overlap_measure,max_mismatch,"
      "nodal_domains,yamabe_residual,converged,iterations\n";
  int failures = 0;
  for (std::size_t k = 0; k < results.size(); ++k) {
    const SolveResult& r = results[k];
    const std::string tag = "_p" + std::to_string(k);
    detail::write_solve(out, tag, r);
    const Partition part = extract_partition(r, c.tau);
    out.write_json(tag + "_partition", partition_json(part), schema::check_partition);
    // An unsegregated state has no alternating build; its row records -1 and nan.
    double nodal = -1.0, residual = std::numeric_limits<double>::quiet_NaN();
    try {
      const Profile u = build_sign_changing(r, c.tau);
      nodal = count_nodal_domains(u, c.tau);
      residual = yamabe_residual(u, c.tau);
      if (k + 1 == results.size()) out.write_csv("_sign_changing", profile_csv(u), "theta,value");
    } catch (const std::invalid_argument&) {
    }
    const double coupling = detail::total_coupling(r);
    for (double x : {r.lambda, r.energy, coupling, r.lambda * coupling, detail::min_norm_squared(r), part.coverage,
                     part.overlap_measure, detail::max_mismatch(part), nodal, residual}) {
      series += format_double(x) + ',';
    }
    series += (r.converged ? "1," : "0,") + std::to_string(r.iterations) + '\n';
    if (!r.converged) ++failures;
    *ctx.log << "sweep: lambda " << r.lambda << " energy " << format_double(r.energy) << " (" << to_string(r.status)
             << ")\n";
  }
  out.write_csv("_series", series, series.substr(0, series.find('\n')));
  out.finish(failures == 0 ? "complete" : "failed",
             failures == 0 ? "" : std::to_string(failures) + " sweep point(s) did not converge");
  return failures == 0 ? kExitOk : kExitNoConvergence;
}

inline int run_dirichlet(const CommandContext& ctx) {
  const RunConfig& c = ctx.config;
  ArtifactWriter out("dirichlet", c);
  const GridPtr grid = build_grid(SphereGeometry::make(c.n1, c.n2), c.grid_N);
  const DirichletResult d = dirichlet_least_energy(grid, c.interval_lo, c.interval_hi, c.solver);
  const std::string profile = out.write_csv("_profile", profile_csv(d.profile), "theta,value");
  json report{{"alpha", c.interval_lo},
              {"beta", c.interval_hi},
              {"c_value", d.c_value},
              {"energy", d.solve.energy},
              {"grad_norm", d.solve.grad_norm},
              {"iterations", d.solve.iterations},
              {"converged", d.solve.converged},
              {"profile", profile}};
  out.write_json("", report, [](const json& j) { detail::require_keys(j, {"alpha", "beta", "c_value", "converged"}); });
  *ctx.log << "dirichlet: c = " << format_double(d.c_value) << '\n';
  out.finish(d.solve.converged ? "complete" : "failed", d.solve.converged ? "" : "minimization did not converge");
  return d.solve.converged ? kExitOk : kExitNoConvergence;
}

inline int run_oracle(const CommandContext& ctx) {
  const RunConfig& c = ctx.config;
  ArtifactWriter out("oracle", c);
  const GridPtr grid = build_grid(SphereGeometry::make(c.n1, c.n2), c.grid_N);
  const InterfaceOracle o = optimal_interface_oracle(grid, static_cast<std::size_t>(c.scan_resolution), c.solver);
  std::string scan = "theta,c_sum\n";
  for (const auto& [k, v] : o.scanned) scan += format_double(grid->nodes[k]) + ',' + format_double(v) + '\n';
  const std::string scan_file = out.write_csv("_scan", scan, "theta,c_sum");
  json report{{"t_star", o.t_star},
              {"index", o.index},
              {"c_sum", o.c_sum},
              {"cell", grid->spacing},
              {"scan_resolution", c.scan_resolution},
              {"scan", scan_file}};
  out.write_json("", report, [](const json& j) { detail::require_keys(j, {"t_star", "c_sum", "cell"}); });
  *ctx.log << "oracle: t* = " << format_double(o.t_star) << " c_sum = " << format_double(o.c_sum) << '\n';
  out.finish("complete");
  return kExitOk;
}

inline int run_sync_solve(const CommandContext& ctx) {
  const RunConfig& c = ctx.config;
  ArtifactWriter out("sync_solve", c);
  const SyncProblem prob(c.sync.m, CouplingMatrix::uniform(c.sync.ell, c.sync.lambda));
  const SyncReport rep = solve_ss1(prob, c.sync.starts, c.solver.seed);
  json sols = json::array();
  double worst = 0.0;
  for (const auto& s : rep.solutions) {
    sols.push_back(std::vector<double>(s.begin(), s.end()));
    worst = std::max(worst, ss1_residual(prob, s).cwiseAbs().maxCoeff());
  }
  json report{{"m", c.sync.m},
              {"ell", c.sync.ell},
              {"lambda", c.sync.lambda},
              {"starts", c.sync.starts},
              {"solutions", sols},
              {"max_residual", worst},
              {"dropped_starts", rep.dropped_starts},
              {"degenerate", rep.degenerate}};
  out.write_json("", report, [](const json& j) { detail::require_keys(j, {"solutions", "dropped_starts"}); });
  *ctx.log << "sync solve: " << rep.solutions.size() << " solution(s) found with " << c.sync.starts << " starts\n";
  out.finish("complete");
  return kExitOk;
}

inline int run_sync_threshold(const CommandContext& ctx) {
  const RunConfig& c = ctx.config;
  ArtifactWriter out("sync_threshold", c);
  const auto rows = threshold_scan(c.sync.m, c.sync.lambda_grid, c.sync.starts, c.solver.seed);
  out.write_csv("", threshold_csv(rows), "lambda,count,degenerate");
  for (const auto& r : rows) *ctx.log << "sync threshold: lambda " << r.lambda << " count " << r.count << '\n';
  out.finish("complete");
  return kExitOk;
}

struct SelfCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Quick invariant suites on small grids.
inline std::vector<SelfCheck> self_checks(std::uint64_t seed) {
  std::vector<SelfCheck> out;
  auto add = [&](std::string name, bool ok, std::string detail) { out.push_back({std::move(name), ok, std::move(detail)}); };

  for (auto [n1, n2] : {std::pair{2, 2}, std::pair{3, 2}}) {
    const SphereGeometry geo = SphereGeometry::make(n1, n2);
    auto error = [&](int N) {
      const GridPtr g = build_grid(geo, N);
      const Profile u = Profile::sample(g, [](double t) { return std::cos(t) * std::cos(t); });
      const Profile lap = apply_reduced_laplacian(u);
      double e = 0.0;
      for (std::size_t k = 0; k < g->size(); ++k) {
        const double ct = std::cos(g->nodes[k]);
        e = std::max(e, std::abs(lap[k] - (-2.0 * (geo.m + 1) * ct * ct + 2.0 * n1)));
      }
      return e;
    };
    const double order = std::log2(error(128) / error(256));
    add("laplacian_order_" + std::to_string(n1) + std::to_string(n2), order >= 1.9,
        "observed order " + format_double(order));
  }

  {
    const SphereGeometry geo = SphereGeometry::make(3, 2);
    const GridPtr g = build_grid(geo, 512);
    double mass = 0.0;
    for (double q : g->quadrature_weights) mass += q;
    const double rel = std::abs(mass * g->orbit_volume - sphere_volume(geo)) / sphere_volume(geo);
    add("quadrature_volume", rel <= 1e-8, "relative error " + format_double(rel));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto smooth = [&] {
      const double a = unit(rng), b = unit(rng), c = unit(rng);
      return Profile::sample(g, [=](double t) { return a + b * std::cos(2 * t) + c * std::cos(4 * t + a); });
    };
    const Profile u = smooth(), v = smooth();
    const double lhs = inner_w(apply_reduced_laplacian(u), v), rhs = inner_w(u, apply_reduced_laplacian(v));
    const double scale = std::sqrt(inner_w(u, u) * inner_w(v, v));
    add("laplacian_self_adjoint", std::abs(lhs - rhs) <= 1e-10 * scale,
        "defect " + format_double(std::abs(lhs - rhs) / scale));
  }

  {
    const GridPtr g = build_grid(SphereGeometry::make(2, 2), 256);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst_res = 0.0, worst_id = 0.0;
    int failed = 0, asym = 0;
    for (int t = 0; t < 30; ++t) {
      const int ell = 1 + t % 3;
      const double lambda = -0.1 - 99.9 * unit(rng);
      const SystemState s = random_state(g, CouplingMatrix::uniform(ell, lambda), rng);
      const Projection p = nehari_project(s);
      if (!p.ok()) {
        ++failed;
        continue;
      }
      const SystemState z = apply_scales(s, p.scales);
      const NehariCoefficients co = nehari_coefficients(z);
      const double amax = *std::max_element(co.a.begin(), co.a.end());
      for (double r : nehari_residuals(z)) worst_res = std::max(worst_res, std::abs(r) / amax);
      double sum_a = 0.0;
      for (double a : co.a) sum_a += a;
      const double j = energy_J(z);
      worst_id = std::max(worst_id, std::abs(j - sum_a / g->dim) / std::abs(j));
      SystemState neg = s;
      for (auto& comp : neg.components)
        for (double& x : comp.values) x = -x;
      if (psi(neg).value != psi(s).value) ++asym;
    }
    add("nehari_projection", failed == 0 && worst_res <= 1e-10,
        std::to_string(failed) + " failures, worst residual " + format_double(worst_res));
    add("nehari_energy_identity", worst_id <= 1e-8, "worst relative defect " + format_double(worst_id));
    add("psi_even", asym == 0, std::to_string(asym) + " asymmetric states");
  }

  {
    double worst = 0.0;
    for (int m : {3, 4, 6}) {
      const std::vector<double> y(m, 0.0);
      worst = std::max(worst, bubble_residual(m, 1.0, y, random_ball_points(m, 100, 5.0, seed)));
    }
    add("bubble_residual", worst <= 1e-10, "max residual " + format_double(worst));
  }

  {
    const SyncReport rep = solve_ss1(SyncProblem(4, CouplingMatrix::uniform(2, 3.0)), 50, seed);
    const bool ok = rep.solutions.size() == 1 && (rep.solutions[0].array() - 0.5).abs().maxCoeff() <= 1e-10;
    add("ss1_symmetric_branch", ok, std::to_string(rep.solutions.size()) + " solution(s)");
  }
  return out;
}

inline int run_selftest(const CommandContext& ctx) {
  const RunConfig& c = ctx.config;
  ArtifactWriter out("selftest", c);
  const auto checks = self_checks(c.solver.seed);
  json arr = json::array();
  bool all = true;
  for (const auto& s : checks) {
    arr.push_back({{"name", s.name}, {"passed", s.passed}, {"detail", s.detail}});
    all = all && s.passed;
    *ctx.log << (s.passed ? "PASS " : "FAIL ") << s.name << ": " << s.detail << '\n';
  }
  out.write_json("", json{{"checks", arr}, {"all_passed", all}},
                 [](const json& j) { detail::require_keys(j, {"checks", "all_passed"}); });
  out.finish(all ? "complete" : "failed", all ? "" : "some invariant checks failed");
  return all ? kExitOk : kExitCheckFailed;
}

/// Runs `command` on `ctx` and times it. Config errors are reported before
/// any file is written; a command that throws part way leaves its manifest
/// marked failed.
inline int run_command(const std::string& command, const CommandContext& ctx) {
  static const std::vector<std::pair<std::string, int (*)(const CommandContext&)>> table = {
      {"single", run_single},       {"solve", run_solve},           {"sweep", run_sweep},
      {"dirichlet", run_dirichlet}, {"oracle", run_oracle},         {"sync_solve", run_sync_solve},
      {"sync_threshold", run_sync_threshold}, {"selftest", run_selftest},
  };
  const bool solver_command = command == "single" || command == "solve" || command == "sweep" ||
                              command == "dirichlet" || command == "oracle";
  ctx.config.validate(solver_command);
  for (const auto& [name, fn] : table) {
    if (name != command) continue;
    const auto start = std::chrono::steady_clock::now();
    int code;
    try {
      code = fn(ctx);
    } catch (const std::exception& e) {
      const auto manifest = ArtifactWriter::manifest_path(command, ctx.config);
      if (std::filesystem::exists(manifest)) {
        json m = json::parse(read_file(manifest));
        m["state"] = "failed";
        m["message"] = e.what();
        write_file(manifest, dump_json(m));
      }
      throw;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ArtifactWriter::write_timing(command, ctx.config, secs);
    return code;
  }
  throw std::invalid_argument("unknown command '" + command + "'");
}

}  // namespace yamabe
