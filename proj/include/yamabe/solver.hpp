#pragma once

/// \file
/// Minimization of Psi over the product of unit g-spheres, lambda
/// continuation, and the scalar Dirichlet problems that define c_Omega.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <future>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "yamabe/discretize.hpp"
#include "yamabe/energy.hpp"

namespace yamabe {

struct SolverOptions {
  int max_iters = 50000;
  double grad_tol = 1e-8;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    if (max_iters < 1) throw std::invalid_argument("SolverOptions: max_iters must be >= 1");
    if (!(grad_tol > 0.0)) throw std::invalid_argument("SolverOptions: grad_tol must be > 0");
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw std::invalid_argument("SolverOptions: armijo_c must lie in (0, 1)");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw std::invalid_argument("SolverOptions: backtrack must lie in (0, 1)");
  }
};

inline constexpr double kPsiRoundoff = 1e-14;

enum class SolveStatus { Converged, NoConvergence, Stalled, NotInU };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::NoConvergence: return "no_convergence";
    case SolveStatus::Stalled: return "stalled";
    case SolveStatus::NotInU: return "not_in_U";
  }
  return "?";
}

struct SolveResult {
  SystemState state;  ///< on the Nehari set, components replaced by |u_i|
  double energy = 0.0;
  Eigen::MatrixXd coupling_integrals;
  double grad_norm = 0.0;
  int iterations = 0;
  double lambda = 0.0;
  bool converged = false;
  SolveStatus status = SolveStatus::NoConvergence;
  /// False for a component that had both signs before |.| was taken.
  std::vector<bool> single_signed;
};

/// Largest off-diagonal coupling; the common value for uniform couplings.
inline double uniform_lambda(const CouplingMatrix& c) {
  if (c.ell() < 2) return 0.0;
  double v = c(0, 1);
  for (int i = 0; i < c.ell(); ++i)
    for (int j = 0; j < c.ell(); ++j)
      if (i != j) v = std::max(v, c(i, j));
  return v;
}

namespace detail {

inline double product_inner(const std::vector<Profile>& x, const std::vector<Profile>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += inner_g(x[i], y[i]);
  return s;
}

/// Riemannian gradient of Psi at the unit state u with projection scales s.
inline std::vector<Profile> psi_gradient(const SystemState& unit, const std::vector<double>& scales,
                                         double& grad_norm) {
  const SystemState z = apply_scales(unit, scales);
  std::vector<Profile> r = grad_J(z);
  double sq = 0.0;
  for (const auto& ri : r) sq += norm_g_squared(ri);
  grad_norm = std::sqrt(sq);
  for (int i = 0; i < unit.ell(); ++i) {
    const Profile& u = unit.components[i];
    const double radial = inner_g(r[i], u);
    for (std::size_t k = 0; k < u.size(); ++k) r[i][k] = scales[i] * (r[i][k] - radial * u[k]);
  }
  return r;
}

inline SystemState retract(const SystemState& unit, const std::vector<Profile>& dir, double step) {
  SystemState out = unit;
  for (int i = 0; i < unit.ell(); ++i) {
    auto& v = out.components[i].values;
    for (std::size_t k = 0; k < v.size(); ++k) v[k] -= step * dir[i][k];
  }
  return normalize(out);
}

}  // namespace detail

/// Descends Psi from `initial` until the gradient of J at the projected
/// point satisfies grad_norm <= grad_tol * energy.
inline SolveResult minimize(const SystemState& initial, const SolverOptions& opts = {}) {
  opts.validate();
  SolveResult result;
  result.lambda = uniform_lambda(initial.coupling);

  SystemState unit = normalize(initial);
  PsiValue value = psi(unit);
  if (!value.ok()) {
    result.state = unit;
    result.status = value.status == ProjectionStatus::NotInU ? SolveStatus::NotInU : SolveStatus::NoConvergence;
    return result;
  }

  double step = 1.0;
  std::vector<Profile> prev_dir;
  SystemState prev_unit;
  double grad_norm = 0.0;
  int it = 0;
  SolveStatus status = SolveStatus::NoConvergence;
  for (;; ++it) {
    std::vector<Profile> dir = detail::psi_gradient(unit, value.scales, grad_norm);
    if (grad_norm <= opts.grad_tol * value.value) {
      status = SolveStatus::Converged;
      break;
    }
    if (it >= opts.max_iters) break;

    // Barzilai-Borwein trial step from the last accepted move.
    if (!prev_dir.empty()) {
      double ss = 0.0, sy = 0.0;
      for (int i = 0; i < unit.ell(); ++i) {
        Profile ds(unit.grid_ptr()), dy(unit.grid_ptr());
        for (std::size_t k = 0; k < ds.size(); ++k) {
          ds[k] = unit.components[i][k] - prev_unit.components[i][k];
          dy[k] = dir[i][k] - prev_dir[i][k];
        }
        ss += norm_g_squared(ds);
        sy += inner_g(ds, dy);
      }
      step = sy > 0.0 ? std::clamp(ss / sy, 1e-12, 1e6) : std::min(2.0 * step, 1e6);
    }

    const double slope = detail::product_inner(dir, dir);
    // Psi is only known to a few ulps; without this allowance the sufficient
    // decrease test cannot be met once c * step * slope drops below roundoff.
    const double noise = kPsiRoundoff * std::abs(value.value);
    bool accepted = false;
    SystemState trial;
    PsiValue trial_value;
    for (int k = 0; k < 200 && step > 1e-18; ++k) {
      trial = detail::retract(unit, dir, step);
      trial_value = psi(trial);
      if (trial_value.ok() && trial_value.value <= value.value - opts.armijo_c * step * slope + noise) {
        accepted = true;
        break;
      }
      step *= opts.backtrack;
    }
    if (!accepted) {
      status = SolveStatus::Stalled;
      break;
    }
    prev_unit = std::move(unit);
    prev_dir = std::move(dir);
    unit = std::move(trial);
    value = std::move(trial_value);
  }

  SystemState z = apply_scales(unit, value.scales);
  result.single_signed.assign(z.ell(), true);
  for (int i = 0; i < z.ell(); ++i) {
    auto& v = z.components[i].values;
    const double hi = *std::max_element(v.begin(), v.end());
    const double lo = *std::min_element(v.begin(), v.end());
    const double scale = std::max(hi, -lo);
    if (hi > 1e-6 * scale && -lo > 1e-6 * scale) result.single_signed[i] = false;
    for (double& x : v) x = std::abs(x);
  }
  result.state = std::move(z);
  result.energy = value.value;
  result.coupling_integrals = coupling_integrals(result.state);
  result.grad_norm = grad_norm;
  result.iterations = it;
  result.status = status;
  result.converged = status == SolveStatus::Converged;
  return result;
}

/// Break points splitting the grid interval into `ell` pieces of equal measure.
inline std::vector<double> equal_measure_breaks(const Grid& g, int ell) {
  std::vector<double> cum(g.size(), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    total += g.quadrature_weights[k];
    cum[k] = total;
  }
  std::vector<double> breaks{g.nodes.front()};
  for (int j = 1; j < ell; ++j) {
    const double target = total * j / ell;
    std::size_t k = 0;
    while (k + 1 < g.size() && cum[k] < target) ++k;
    // cum is the measure up to the dual-cell boundary theta_k + h/2.
    const double right = g.nodes[k] + 0.5 * g.spacing;
    const double left = right - g.spacing;
    const double c_left = k == 0 ? 0.0 : cum[k - 1];
    const double frac = (target - c_left) / std::max(cum[k] - c_left, 1e-300);
    breaks.push_back(std::clamp(left + frac * g.spacing, g.nodes.front(), g.nodes.back()));
  }
  breaks.push_back(g.nodes.back());
  return breaks;
}

/// Smooth bumps on `ell` disjoint subintervals of equal measure. A piece
/// touching a natural (unpinned) end peaks there with zero slope; other
/// pieces are raised cosines vanishing at both ends.
inline std::vector<Profile> disjoint_bumps(const GridPtr& grid, int ell) {
  const Grid& g = *grid;
  const std::vector<double> br = equal_measure_breaks(g, ell);
  std::vector<Profile> out;
  for (int j = 0; j < ell; ++j) {
    const double a = br[j], b = br[j + 1], len = b - a;
    const bool left_free = j == 0 && !g.pinned_left;
    const bool right_free = j == ell - 1 && !g.pinned_right;
    out.push_back(Profile::sample(grid, [=](double t) {
      if (t < a || t > b) return 0.0;
      const double x = (t - a) / len;
      if (left_free && !right_free) return std::pow(std::cos(0.5 * std::numbers::pi * x), 2);
      if (right_free && !left_free) return std::pow(std::sin(0.5 * std::numbers::pi * x), 2);
      return 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * x));
    }));
  }
  return out;
}

inline SystemState initial_state(const GridPtr& grid, const CouplingMatrix& coupling) {
  return SystemState(disjoint_bumps(grid, coupling.ell()), coupling);
}

/// lambda * int |u_i|^{2*/2} |u_j|^{2*/2}, the vanishing-coupling diagnostic.
inline Eigen::MatrixXd lambda_coupling(const SolveResult& r) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(r.coupling_integrals.rows(), r.coupling_integrals.cols());
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      if (i != j) out(i, j) = r.state.coupling(static_cast<int>(i), static_cast<int>(j)) * r.coupling_integrals(i, j);
  return out;
}

inline void validate_schedule(const std::vector<double>& schedule) {
  if (schedule.empty()) throw std::invalid_argument("sweep: empty schedule");
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    if (!(schedule[k] < 0.0)) throw std::invalid_argument("sweep: schedule entries must be negative");
    if (k > 0 && !(schedule[k] < schedule[k - 1])) {
      throw std::invalid_argument("sweep: schedule must be strictly decreasing");
    }
  }
}

/// Warm-started continuation along `schedule`. Each point starts from the
/// last converged state; if that state is not in U for the new coupling,
/// the disjoint-bump start is used instead.
inline std::vector<SolveResult> sweep(const GridPtr& grid, int ell, const std::vector<double>& schedule,
                                      const SolverOptions& opts = {}) {
  validate_schedule(schedule);
  if (ell < 2) throw std::invalid_argument("sweep: need ell >= 2");
  std::vector<SolveResult> out;
  std::vector<Profile> last_good;
  for (double lambda : schedule) {
    const CouplingMatrix coupling = CouplingMatrix::uniform(ell, lambda);
    SystemState start = initial_state(grid, coupling);
    if (!last_good.empty()) {
      SystemState warm(last_good, coupling);
      if (psi(warm).ok()) start = std::move(warm);
    }
    out.push_back(minimize(start, opts));
    if (out.back().converged) last_good = out.back().state.components;
  }
  return out;
}

struct DirichletResult {
  double c_value = 0.0;
  Profile profile;  ///< on the full grid, zero outside the interval
  SolveResult solve;
};

/// Least-energy solution of the scalar problem on nodes [lo, hi] with zero
/// values at ends interior to the orbit interval.
inline DirichletResult dirichlet_least_energy(const GridPtr& grid, std::size_t lo, std::size_t hi,
                                              const SolverOptions& opts = {}) {
  const GridPtr sub = restrict_grid(*grid, lo, hi);
  const SystemState start(disjoint_bumps(sub, 1), CouplingMatrix::uniform(1, 0.0));
  DirichletResult out;
  out.solve = minimize(start, opts);
  out.c_value = norm_g_squared(out.solve.state.components[0]) / sub->dim;
  out.profile = extend_by_zero(out.solve.state.components[0], grid);
  return out;
}

inline std::size_t node_index(const Grid& g, double theta) {
  const double pos = (theta - g.nodes.front()) / g.spacing;
  const double k = std::round(pos);
  if (std::abs(pos - k) > 1e-9 || k < 0 || k >= static_cast<double>(g.size())) {
    throw std::invalid_argument("theta = " + std::to_string(theta) + " is not a grid node");
  }
  return static_cast<std::size_t>(k);
}

inline DirichletResult dirichlet_least_energy(const GridPtr& grid, double alpha, double beta,
                                              const SolverOptions& opts = {}) {
  if (!(alpha < beta)) throw std::invalid_argument("dirichlet_least_energy: need alpha < beta");
  return dirichlet_least_energy(grid, node_index(*grid, alpha), node_index(*grid, beta), opts);
}

struct InterfaceOracle {
  double t_star = 0.0;
  std::size_t index = 0;
  double c_sum = 0.0;
  /// Every scanned candidate: (node index, c_left + c_right).
  std::vector<std::pair<std::size_t, double>> scanned;
};

namespace detail {

template <class F>
void parallel_for(std::size_t n, F&& f) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t k = w; k < n; k += workers) f(k);
    }));
  }
  for (auto& j : jobs) j.get();
}

}  // namespace detail

/// Brute-force scan of the two-piece interface: every `scan_resolution`-th
/// node first, then every node within one stride of the coarse minimum.
inline InterfaceOracle optimal_interface_oracle(const GridPtr& grid, std::size_t scan_resolution,
                                                const SolverOptions& opts = {}) {
  const std::size_t N = grid->cells();
  if (scan_resolution == 0 || N % scan_resolution != 0) {
    throw std::invalid_argument("optimal_interface_oracle: scan_resolution must divide N");
  }
  const std::size_t first = 9, last = N - 9;  // >= 8 interior nodes on each side
  auto evaluate = [&](const std::vector<std::size_t>& cand) {
    std::vector<double> vals(cand.size());
    detail::parallel_for(cand.size(), [&](std::size_t k) {
      vals[k] = dirichlet_least_energy(grid, 0, cand[k], opts).c_value +
                dirichlet_least_energy(grid, cand[k], N, opts).c_value;
    });
    return vals;
  };
  InterfaceOracle out;
  std::vector<std::size_t> coarse;
  for (std::size_t k = scan_resolution; k < N; k += scan_resolution)
    if (k >= first && k <= last) coarse.push_back(k);
  if (coarse.empty()) throw std::invalid_argument("optimal_interface_oracle: grid too coarse");
  std::vector<double> vals = evaluate(coarse);
  for (std::size_t k = 0; k < coarse.size(); ++k) out.scanned.emplace_back(coarse[k], vals[k]);

  const auto best = std::min_element(vals.begin(), vals.end()) - vals.begin();
  const std::size_t centre = coarse[static_cast<std::size_t>(best)];
  std::vector<std::size_t> fine;
  for (std::size_t k = centre > scan_resolution ? centre - scan_resolution : 0; k <= centre + scan_resolution; ++k)
    if (k >= first && k <= last && k != centre && k % scan_resolution != 0) fine.push_back(k);
  std::vector<double> fine_vals = evaluate(fine);
  for (std::size_t k = 0; k < fine.size(); ++k) out.scanned.emplace_back(fine[k], fine_vals[k]);

  std::sort(out.scanned.begin(), out.scanned.end());
  auto argmin = std::min_element(out.scanned.begin(), out.scanned.end(),
                                 [](const auto& x, const auto& y) { return x.second < y.second; });
  out.index = argmin->first;
  out.c_sum = argmin->second;
  out.t_star = grid->nodes[out.index];
  return out;
}

}  // namespace yamabe
