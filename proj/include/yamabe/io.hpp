#pragma once

/// \file
/// Serialization of profiles, solve results, partitions and threshold
/// tables, and the structural checks every written artifact must pass.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "yamabe/analysis.hpp"
#include "yamabe/sync.hpp"

namespace yamabe {

using nlohmann::json;

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string profile_csv(const Profile& u) {
  std::string out = "theta,value\n";
  for (std::size_t k = 0; k < u.size(); ++k) {
    out += format_double(u.grid->nodes[k]);
    out += ',';
    out += format_double(u[k]);
    out += '\n';
  }
  return out;
}

inline json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

/// `component_files` are the names the component CSVs were written under.
inline json solve_result_json(const SolveResult& r, const std::vector<std::string>& component_files) {
  return json{
      {"lambda", r.lambda},
      {"energy", r.energy},
      {"grad_norm", r.grad_norm},
      {"iterations", r.iterations},
      {"converged", r.converged},
      {"coupling_integrals", matrix_rows(r.coupling_integrals)},
      {"components", component_files},
  };
}

inline json partition_json(const Partition& p) {
  json intervals = json::array();
  for (const auto& iv : p.intervals) {
    intervals.push_back({{"owner", iv.owner}, {"left", iv.left}, {"right", iv.right}});
  }
  json interfaces = json::array();
  for (const auto& d : reflection_check(p)) {
    const Interface& f = d.interface;
    interfaces.push_back({{"location", f.location},
                          {"left_owner", f.left_owner},
                          {"right_owner", f.right_owner},
                          {"left_slope", f.left_slope},
                          {"right_slope", f.right_slope},
                          {"relative_mismatch", d.relative_mismatch},
                          {"singular", d.singular}});
  }
  return json{{"intervals", intervals},
              {"interfaces", interfaces},
              {"coverage", p.coverage},
              {"overlap_measure", p.overlap_measure},
              {"gap_measure", p.gap_measure},
              {"overlap_warning", p.overlap_warning()}};
}

inline std::string threshold_csv(const std::vector<ThresholdRow>& rows) {
  std::string out = "lambda,count,degenerate\n";
  for (const auto& r : rows) {
    out += format_double(r.lambda) + ',' + std::to_string(r.count) + ',' + (r.degenerate ? "1" : "0") + '\n';
  }
  return out;
}

namespace schema {

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw SchemaError(what);
}

inline void require_number(const json& j, const char* key) {
  require(j.contains(key) && j.at(key).is_number(), std::string("missing number '") + key + "'");
}

inline void require_fields(const json& j, std::initializer_list<const char*> keys) {
  require(j.is_object(), "expected an object");
  for (const char* k : keys) require(j.contains(k), std::string("missing field '") + k + "'");
}

}  // namespace detail

/// A solve result has exactly the documented fields and consistent shapes.
inline void check_solve_result(const json& j) {
  using namespace detail;
  require_fields(j, {"lambda", "energy", "grad_norm", "iterations", "converged", "coupling_integrals", "components"});
  require(j.size() == 7, "solve result has extra fields");
  for (const char* k : {"lambda", "energy", "grad_norm"}) require_number(j, k);
  require(j.at("iterations").is_number_integer(), "iterations must be an integer");
  require(j.at("converged").is_boolean(), "converged must be a boolean");
  const json& comps = j.at("components");
  require(comps.is_array() && !comps.empty(), "components must be a non-empty array");
  for (const auto& c : comps) require(c.is_string(), "component references must be strings");
  const json& ci = j.at("coupling_integrals");
  require(ci.is_array() && ci.size() == comps.size(), "coupling_integrals must be ell x ell");
  for (const auto& row : ci) {
    require(row.is_array() && row.size() == comps.size(), "coupling_integrals must be ell x ell");
    for (const auto& x : row) require(x.is_number(), "coupling_integrals entries must be numbers");
  }
}

inline void check_partition(const json& j) {
  using namespace detail;
  require_fields(j, {"intervals", "interfaces", "coverage"});
  require_number(j, "coverage");
  require(j.at("intervals").is_array() && j.at("interfaces").is_array(), "intervals/interfaces must be arrays");
  for (const auto& iv : j.at("intervals")) {
    require_fields(iv, {"owner", "left", "right"});
    require(iv.at("left").get<double>() <= iv.at("right").get<double>(), "interval with left > right");
  }
  for (const auto& f : j.at("interfaces")) {
    require_fields(f, {"location", "left_owner", "right_owner", "left_slope", "right_slope", "relative_mismatch"});
  }
}

/// CSV with the given header and numeric cells, at least one data row.
inline void check_csv(const std::string& text, const std::string& header) {
  std::istringstream in(text);
  std::string line;
  detail::require(static_cast<bool>(std::getline(in, line)) && line == header, "csv header is not '" + header + "'");
  const auto columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::string cell;
    std::size_t n = 0;
    while (std::getline(cells, cell, ',')) {
      std::size_t used = 0;
      try {
        (void)std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      detail::require(used == cell.size() && !cell.empty(), "csv cell '" + cell + "' is not a number");
      ++n;
    }
    detail::require(n == columns, "csv row with " + std::to_string(n) + " cells, expected " + std::to_string(columns));
    ++rows;
  }
  detail::require(rows > 0, "csv has no data rows");
}

}  // namespace schema

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

}  // namespace yamabe
