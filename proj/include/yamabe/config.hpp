#pragma once

/// \file
/// Run configuration: one JSON document, validated on load, whose canonical
/// dump is hashed to name every artifact of a run.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "yamabe/solver.hpp"

namespace yamabe {

using nlohmann::json;

struct SyncConfig {
  int m = 4;
  int ell = 2;
  double lambda = 0.0;
  int starts = 200;
  std::vector<double> lambda_grid{-2.0, -1.1, -1.0, -0.9, -0.5, 0.0, 0.5, 2.0};
};

struct RunConfig {
  int n1 = 2;
  int n2 = 2;
  int ell = 2;
  int grid_N = 1024;
  double lambda = -10.0;  ///< used by `solve`
  std::vector<double> lambda_schedule{-1.0, -4.0, -16.0, -64.0, -256.0, -1024.0, -4096.0};
  SolverOptions solver;
  double tau = kDefaultSupportThreshold;
  double reflection_tol = 0.05;
  double interval_lo = 0.0;  ///< `dirichlet` interval, on grid nodes
  double interval_hi = SphereGeometry::length();
  int scan_resolution = 16;
  SyncConfig sync;
  std::string output_dir = "out";

  void validate(bool solver_command) const;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

}  // namespace detail

inline void RunConfig::validate(bool solver_command) const {
  if (n1 < 2 || n2 < 2) throw ConfigError("geometry: n1 and n2 must be >= 2");
  if (ell < 1) throw ConfigError("ell must be >= 1");
  if (grid_N < 8) throw ConfigError("grid_N must be >= 8");
  if (solver_command && grid_N < 64) throw ConfigError("grid_N must be >= 64 for solver commands");
  if (lambda_schedule.empty()) throw ConfigError("lambda_schedule is empty");
  for (std::size_t k = 0; k < lambda_schedule.size(); ++k) {
    if (!(lambda_schedule[k] < 0.0)) throw ConfigError("lambda_schedule entries must be negative");
    if (k > 0 && !(lambda_schedule[k] < lambda_schedule[k - 1])) {
      throw ConfigError("lambda_schedule must be strictly decreasing");
    }
  }
  if (!(lambda < 0.0)) throw ConfigError("lambda must be negative");
  try {
    solver.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("thresholds.tau must lie in (0, 1)");
  if (!(reflection_tol > 0.0)) throw ConfigError("thresholds.reflection_tol must be > 0");
  if (!(interval_lo >= 0.0 && interval_lo < interval_hi && interval_hi <= SphereGeometry::length() + 1e-12)) {
    throw ConfigError("interval must satisfy 0 <= lo < hi <= pi/2");
  }
  if (scan_resolution < 1 || grid_N % scan_resolution != 0) {
    throw ConfigError("scan_resolution must divide grid_N");
  }
  if (sync.m < 3) throw ConfigError("sync.m must be >= 3");
  if (sync.ell < 1) throw ConfigError("sync.ell must be >= 1");
  if (sync.starts < 1) throw ConfigError("sync.starts must be >= 1");
  if (sync.lambda_grid.empty()) throw ConfigError("sync.lambda_grid is empty");
  if (output_dir.empty()) throw ConfigError("output_dir is empty");
}

inline json to_json(const RunConfig& c) {
  return json{
      {"geometry", {{"n1", c.n1}, {"n2", c.n2}}},
      {"ell", c.ell},
      {"grid_N", c.grid_N},
      {"lambda", c.lambda},
      {"lambda_schedule", c.lambda_schedule},
      {"solver",
       {{"max_iters", c.solver.max_iters},
        {"grad_tol", c.solver.grad_tol},
        {"armijo_c", c.solver.armijo_c},
        {"backtrack", c.solver.backtrack},
        {"seed", c.solver.seed}}},
      {"thresholds", {{"tau", c.tau}, {"reflection_tol", c.reflection_tol}}},
      {"interval", {c.interval_lo, c.interval_hi}},
      {"scan_resolution", c.scan_resolution},
      {"sync",
       {{"m", c.sync.m},
        {"ell", c.sync.ell},
        {"lambda", c.sync.lambda},
        {"starts", c.sync.starts},
        {"lambda_grid", c.sync.lambda_grid}}},
      {"output_dir", c.output_dir},
  };
}

/// Missing keys keep their defaults; unknown keys are errors.
inline RunConfig config_from_json(const json& j) {
  using detail::read;
  detail::reject_unknown(j,
                         {"geometry", "ell", "grid_N", "lambda", "lambda_schedule", "solver", "thresholds",
                          "interval", "scan_resolution", "sync", "output_dir"},
                         "config");
  RunConfig c;
  if (j.contains("geometry")) {
    const json& g = j.at("geometry");
    detail::reject_unknown(g, {"n1", "n2"}, "geometry");
    read(g, "n1", c.n1, "geometry");
    read(g, "n2", c.n2, "geometry");
  }
  read(j, "ell", c.ell, "config");
  read(j, "grid_N", c.grid_N, "config");
  read(j, "lambda", c.lambda, "config");
  read(j, "lambda_schedule", c.lambda_schedule, "config");
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    detail::reject_unknown(s, {"max_iters", "grad_tol", "armijo_c", "backtrack", "seed"}, "solver");
    read(s, "max_iters", c.solver.max_iters, "solver");
    read(s, "grad_tol", c.solver.grad_tol, "solver");
    read(s, "armijo_c", c.solver.armijo_c, "solver");
    read(s, "backtrack", c.solver.backtrack, "solver");
    read(s, "seed", c.solver.seed, "solver");
  }
  if (j.contains("thresholds")) {
    const json& t = j.at("thresholds");
    detail::reject_unknown(t, {"tau", "reflection_tol"}, "thresholds");
    read(t, "tau", c.tau, "thresholds");
    read(t, "reflection_tol", c.reflection_tol, "thresholds");
  }
  if (j.contains("interval")) {
    std::vector<double> iv;
    read(j, "interval", iv, "config");
    if (iv.size() != 2) throw ConfigError("interval must be [lo, hi]");
    c.interval_lo = iv[0];
    c.interval_hi = iv[1];
  }
  read(j, "scan_resolution", c.scan_resolution, "config");
  if (j.contains("sync")) {
    const json& s = j.at("sync");
    detail::reject_unknown(s, {"m", "ell", "lambda", "starts", "lambda_grid"}, "sync");
    read(s, "m", c.sync.m, "sync");
    read(s, "ell", c.sync.ell, "sync");
    read(s, "lambda", c.sync.lambda, "sync");
    read(s, "starts", c.sync.starts, "sync");
    read(s, "lambda_grid", c.sync.lambda_grid, "sync");
  }
  read(j, "output_dir", c.output_dir, "config");
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

/// 64-bit FNV-1a of the canonical dump, as 16 hex digits. The output
/// directory is left out so the same run names its files the same way
/// wherever they go.
inline std::string config_hash(const RunConfig& c) {
  RunConfig key = c;
  key.output_dir.clear();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(key).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace yamabe
