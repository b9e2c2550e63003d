#pragma once

/// \file
/// Post-processing of converged states: the partition of the orbit interval
/// into component supports, the reflection diagnostic at interfaces, the
/// alternating-sign Yamabe profile and its residual.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "yamabe/discretize.hpp"
#include "yamabe/solver.hpp"

namespace yamabe {

inline constexpr double kDefaultSupportThreshold = 1e-2;
inline constexpr double kSingularSlopeRatio = 1e-4;

struct PartitionInterval {
  int owner = 0;
  double left = 0.0;
  double right = 0.0;
  std::size_t first_node = 0;  ///< support run, before clipping at interfaces
  std::size_t last_node = 0;
};

struct Interface {
  double location = 0.0;
  int left_owner = 0;
  int right_owner = 0;
  double left_slope = 0.0;   ///< u'_left where the two components meet
  double right_slope = 0.0;  ///< u'_right where the two components meet
};

struct Partition {
  std::vector<PartitionInterval> intervals;
  std::vector<Interface> interfaces;
  double coverage = 0.0;
  /// Total length where neighbouring supports overlap; nonzero means the
  /// state is not yet segregated at the chosen threshold.
  double overlap_measure = 0.0;
  /// Total length of gaps between neighbouring supports, split between the
  /// two owners at the interface.
  double gap_measure = 0.0;

  bool overlap_warning() const { return overlap_measure > 0.0; }
};

namespace detail {

struct Run {
  int owner;
  std::size_t first;
  std::size_t last;
};

/// Maximal runs of nodes where pred(k) holds.
template <class Pred>
std::vector<std::pair<std::size_t, std::size_t>> runs_where(std::size_t n, Pred&& pred) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t k = 0;
  while (k < n) {
    if (!pred(k)) {
      ++k;
      continue;
    }
    const std::size_t start = k;
    while (k + 1 < n && pred(k + 1)) ++k;
    out.emplace_back(start, k);
    ++k;
  }
  return out;
}

/// Derivative at t of the quadratic interpolating u at nodes k0 < k0+1 < k0+2.
inline double quadratic_slope(const Profile& u, std::size_t k0, double t) {
  const auto& x = u.grid->nodes;
  const double x0 = x[k0], x1 = x[k0 + 1], x2 = x[k0 + 2];
  return u[k0] * (2 * t - x1 - x2) / ((x0 - x1) * (x0 - x2)) +
         u[k0 + 1] * (2 * t - x0 - x2) / ((x1 - x0) * (x1 - x2)) +
         u[k0 + 2] * (2 * t - x0 - x1) / ((x2 - x0) * (x2 - x1));
}

/// One-sided slopes of the left and right components where they meet.
///
/// The meeting point is where left - right changes sign; when both vanish on
/// a gap, each component is differentiated at its own support edge. Every
/// stencil uses three nodes on the component's own side.
inline std::pair<double, double> meeting_slopes(const Profile& left, const Profile& right, std::size_t lo,
                                                std::size_t hi) {
  const auto& x = left.grid->nodes;
  const std::size_t n = left.size();
  std::size_t kl = lo;
  for (std::size_t k = lo; k <= hi; ++k)
    if (left[k] > right[k]) kl = k;
  std::size_t kr = std::min(kl + 1, n - 1);
  while (kr < hi && !(right[kr] > left[kr])) ++kr;

  double tl = x[kl], tr = x[kr];
  std::size_t left_end = kl, right_start = kr;
  if (kr == kl + 1) {
    const double dl = left[kl] - right[kl];
    const double dr = left[kr] - right[kr];
    const double frac = dl / (dl - dr);
    tl = tr = x[kl] + frac * (x[kr] - x[kl]);
    if (frac < 1e-3) {
      right_start = kl;
      tl = tr = x[kl];
    } else if (frac > 1.0 - 1e-3) {
      left_end = kr;
      tl = tr = x[kr];
    }
  }
  const double sl = left_end >= 2 ? quadratic_slope(left, left_end - 2, tl)
                                  : (left_end >= 1 ? (left[left_end] - left[left_end - 1]) / (x[left_end] - x[left_end - 1]) : 0.0);
  const double sr = right_start + 2 < n ? quadratic_slope(right, right_start, tr)
                                        : (right_start + 1 < n ? (right[right_start + 1] - right[right_start]) / (x[right_start + 1] - x[right_start]) : 0.0);
  return {sl, sr};
}

}  // namespace detail

/// Supports {u_i > tau max u_i} as ordered intervals. Adjacent supports of
/// different owners meet at the midpoint between their edges: overlaps are
/// clipped there, gaps are split there, and both are reported.
inline Partition extract_partition(const std::vector<Profile>& comps, double tau = kDefaultSupportThreshold) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("extract_partition: tau must lie in (0, 1)");
  if (comps.empty()) throw std::invalid_argument("extract_partition: no components");
  const Grid& g = *comps.front().grid;
  std::vector<detail::Run> runs;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    require_same_grid(comps[i], comps.front());
    double peak = 0.0;
    for (double x : comps[i].values) peak = std::max(peak, x);
    if (!(peak > 0.0)) continue;
    const double thr = tau * peak;
    for (auto [a, b] : detail::runs_where(g.size(), [&](std::size_t k) { return comps[i][k] > thr; }))
      runs.push_back({static_cast<int>(i), a, b});
  }
  std::sort(runs.begin(), runs.end(), [](const detail::Run& x, const detail::Run& y) {
    return x.first != y.first ? x.first < y.first : x.owner < y.owner;
  });

  Partition part;
  for (const auto& r : runs) {
    part.intervals.push_back({r.owner, g.nodes[r.first], g.nodes[r.last], r.first, r.last});
  }
  for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
    const auto& a = runs[k];
    const auto& b = runs[k + 1];
    if (a.owner == b.owner) continue;
    Interface f;
    f.location = 0.5 * (g.nodes[a.last] + g.nodes[b.first]);
    f.left_owner = a.owner;
    f.right_owner = b.owner;
    std::tie(f.left_slope, f.right_slope) = detail::meeting_slopes(
        comps[a.owner], comps[b.owner], std::min(a.first, b.first), std::max(a.last, b.last));
    part.overlap_measure += std::max(0.0, g.nodes[a.last] - g.nodes[b.first]);
    part.gap_measure += std::max(0.0, g.nodes[b.first] - g.nodes[a.last]);
    part.interfaces.push_back(f);
    part.intervals[k].right = f.location;
    part.intervals[k + 1].left = f.location;
    // A support nested inside its neighbour's collapses to a point.
    part.intervals[k + 1].right = std::max(part.intervals[k + 1].right, f.location);
  }
  double covered = 0.0;
  for (const auto& iv : part.intervals) covered += std::max(0.0, iv.right - iv.left);
  part.coverage = std::min(1.0, covered / g.extent());
  return part;
}

inline Partition extract_partition(const SolveResult& result, double tau = kDefaultSupportThreshold) {
  return extract_partition(result.state.components, tau);
}

struct ReflectionDiagnostic {
  Interface interface;
  double relative_mismatch = 0.0;
  /// Both one-sided slopes are negligible: a candidate singular point.
  bool singular = false;
};

/// |s_l^2 - s_r^2| / max(s_l^2, s_r^2) per interface.
inline std::vector<ReflectionDiagnostic> reflection_check(const Partition& part) {
  double max_sq = 0.0;
  for (const auto& f : part.interfaces)
    max_sq = std::max({max_sq, f.left_slope * f.left_slope, f.right_slope * f.right_slope});
  std::vector<ReflectionDiagnostic> out;
  for (const auto& f : part.interfaces) {
    const double l2 = f.left_slope * f.left_slope;
    const double r2 = f.right_slope * f.right_slope;
    const double denom = std::max(l2, r2);
    ReflectionDiagnostic d;
    d.interface = f;
    d.relative_mismatch = denom > 0.0 ? std::abs(l2 - r2) / denom : 0.0;
    d.singular = max_sq == 0.0 || std::max(l2, r2) < kSingularSlopeRatio * max_sq;
    out.push_back(d);
  }
  return out;
}

/// sum_i (-1)^{i} u_{(i)} with components ordered by the position of their
/// support. Requires one interval per component.
inline Profile build_sign_changing(const std::vector<Profile>& comps, double tau = kDefaultSupportThreshold) {
  if (comps.size() < 2) throw std::invalid_argument("build_sign_changing: need at least two components");
  const Partition part = extract_partition(comps, tau);
  if (part.intervals.size() != comps.size()) {
    throw std::invalid_argument("build_sign_changing: partition has " + std::to_string(part.intervals.size()) +
                                " intervals for " + std::to_string(comps.size()) + " components");
  }
  std::vector<bool> seen(comps.size(), false);
  for (std::size_t k = 0; k < part.intervals.size(); ++k) {
    const auto& iv = part.intervals[k];
    if (seen[iv.owner]) throw std::invalid_argument("build_sign_changing: component owns two intervals");
    seen[iv.owner] = true;
    if (k > 0 && iv.left < part.intervals[k - 1].right) {
      throw std::invalid_argument("build_sign_changing: intervals overlap");
    }
  }
  Profile u(comps.front().grid);
  for (std::size_t k = 0; k < part.intervals.size(); ++k) {
    const double sign = k % 2 == 0 ? 1.0 : -1.0;
    const Profile& c = comps[part.intervals[k].owner];
    for (std::size_t n = 0; n < u.size(); ++n) u[n] += sign * c[n];
  }
  return u;
}

inline Profile build_sign_changing(const SolveResult& result, double tau = kDefaultSupportThreshold) {
  return build_sign_changing(result.state.components, tau);
}

/// Maximal runs of nodes with |u| > tau max|u| and constant sign.
inline std::vector<std::pair<std::size_t, std::size_t>> nodal_runs(const Profile& u, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("nodal domains: tau must lie in (0, 1)");
  const double thr = tau * max_abs(u);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (thr == 0.0) return out;
  for (int sign : {1, -1}) {
    for (auto r : detail::runs_where(u.size(), [&](std::size_t k) { return sign * u[k] > thr; })) out.push_back(r);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline int count_nodal_domains(const Profile& u, double tau = kDefaultSupportThreshold) {
  return static_cast<int>(nodal_runs(u, tau).size());
}

/// Weighted L2 norm of -Delta u + kappa u - |u|^{2*-2} u over the central
/// 90% of each nodal run, divided by ||u||_g.
inline double yamabe_residual(const Profile& u, double tau = kDefaultSupportThreshold) {
  const Grid& g = *u.grid;
  const double norm = std::sqrt(norm_g_squared(u));
  if (norm == 0.0) return 0.0;
  const Profile lap = apply_reduced_laplacian(u);
  double sum = 0.0;
  for (auto [a, b] : nodal_runs(u, tau)) {
    const double margin = 0.05 * (g.nodes[b] - g.nodes[a]);
    const double lo = g.nodes[a] + margin;
    const double hi = g.nodes[b] - margin;
    for (std::size_t k = a; k <= b; ++k) {
      if (g.nodes[k] < lo || g.nodes[k] > hi || g.pinned(k)) continue;
      const double r = -lap[k] + g.conformal_coeff * u[k] - std::pow(std::abs(u[k]), g.crit_exp - 2.0) * u[k];
      sum += g.quadrature_weights[k] * r * r;
    }
  }
  return std::sqrt(g.orbit_volume * sum) / norm;
}

}  // namespace yamabe
