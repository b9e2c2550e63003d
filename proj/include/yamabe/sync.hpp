#pragma once

/// \file
/// Fully synchronized solutions (c_1 U, ..., c_l U) of the competitive
/// system on R^m and the standard bubbles U_{delta,y} they are built on.
///
/// The multipliers solve
///
///   c_i = c_i^{2*-1} + sum_{j != i} lambda_ij c_j^{2*/2} c_i^{2*/2-1},  c_i > 0,
///
/// which is the scaling system of the energy module with a = b = 1 and
/// d = lambda. Root finding is multistart Newton; an empty answer means no
/// root was found from the sampled starts, not that none exists.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "yamabe/energy.hpp"
#include "yamabe/scaling_newton.hpp"

namespace yamabe {

struct SyncProblem {
  int m = 4;
  CouplingMatrix coupling;

  SyncProblem(int dim, CouplingMatrix c) : m(dim), coupling(std::move(c)) {
    if (m < 3) throw std::invalid_argument("SyncProblem: m must be >= 3");
  }
  double crit_exp() const { return 2.0 * m / (m - 2.0); }
  int ell() const { return coupling.ell(); }
};

struct SyncReport {
  std::vector<Eigen::VectorXd> solutions;
  int dropped_starts = 0;
  /// Some root has a singular Jacobian, so roots are not isolated.
  bool degenerate = false;
};

/// c_i - c_i^{2*-1} - sum_{j != i} lambda_ij c_j^{2*/2} c_i^{2*/2-1}.
inline Eigen::VectorXd ss1_residual(const SyncProblem& prob, const Eigen::VectorXd& c) {
  const double p = prob.crit_exp();
  const double half = 0.5 * p;
  Eigen::VectorXd r(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    r(i) = c(i) - std::pow(c(i), p - 1.0);
    for (Eigen::Index j = 0; j < c.size(); ++j) {
      if (j != i) r(i) -= prob.coupling(static_cast<int>(i), static_cast<int>(j)) * std::pow(c(j), half) * std::pow(c(i), half - 1.0);
    }
  }
  return r;
}

namespace detail {

inline ScalingSystem ss1_system(const SyncProblem& prob) {
  ScalingSystem sys;
  const int ell = prob.ell();
  sys.a = Eigen::VectorXd::Ones(ell);
  sys.b = Eigen::VectorXd::Ones(ell);
  sys.d = prob.coupling.lambda;
  sys.p = prob.crit_exp();
  return sys;
}

}  // namespace detail

/// Equal multipliers for couplings with constant row sums r, when 1 + r > 0.
inline Eigen::VectorXd symmetric_guess(const SyncProblem& prob) {
  const Eigen::VectorXd rows = prob.coupling.lambda.rowwise().sum();
  const int ell = prob.ell();
  if ((rows.array() - rows(0)).abs().maxCoeff() < 1e-14 && 1.0 + rows(0) > 0.0) {
    return Eigen::VectorXd::Constant(ell, std::pow(1.0 + rows(0), -1.0 / (prob.crit_exp() - 2.0)));
  }
  return Eigen::VectorXd::Ones(ell);
}

inline constexpr double kSs1ResidualTol = 1e-10;
inline constexpr double kSs1DedupTol = 1e-8;

inline SyncReport solve_ss1(const SyncProblem& prob, int starts, std::uint64_t seed = 0) {
  if (starts < 1) throw std::invalid_argument("solve_ss1: starts must be >= 1");
  const int ell = prob.ell();
  const detail::ScalingSystem sys = detail::ss1_system(prob);
  detail::NewtonOptions opts;
  opts.max_iters = 200;
  opts.tol = 1e-14;
  opts.log_lower = std::log(1e-8);
  opts.log_upper = std::log(1e8);

  std::vector<Eigen::VectorXd> guesses{symmetric_guess(prob).array().log().matrix()};
  std::mt19937_64 rng(seed);
  for (int s = 0; s < starts; ++s) {
    Eigen::VectorXd xi(ell);
    for (int i = 0; i < ell; ++i) {
      const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      xi(i) = std::log(1e-2) + unit * (std::log(1e2) - std::log(1e-2));
    }
    guesses.push_back(xi);
  }

  SyncReport report;
  for (const auto& xi0 : guesses) {
    const detail::NewtonOutcome res = detail::scaling_newton(sys, xi0, opts);
    if (res.exit != detail::NewtonExit::Converged) {
      ++report.dropped_starts;
      continue;
    }
    const Eigen::VectorXd c = res.xi.array().exp();
    if (ss1_residual(prob, c).cwiseAbs().maxCoeff() > kSs1ResidualTol) {
      ++report.dropped_starts;
      continue;
    }
    const bool dup = std::any_of(report.solutions.begin(), report.solutions.end(), [&](const Eigen::VectorXd& o) {
      return (o - c).cwiseAbs().maxCoeff() <= kSs1DedupTol * std::max(1.0, c.cwiseAbs().maxCoeff());
    });
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(detail::scaling_jacobian(sys, res.xi));
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 1e-8 * sv(0)) report.degenerate = true;
    if (!dup) report.solutions.push_back(c);
  }
  std::sort(report.solutions.begin(), report.solutions.end(), [](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
  });
  return report;
}

struct ThresholdRow {
  double lambda = 0.0;
  int count = 0;
  bool degenerate = false;
};

/// Number of positive solutions found for l = 2 at each lambda_12.
inline std::vector<ThresholdRow> threshold_scan(int m, std::span<const double> lambda_grid, int starts = 200,
                                                std::uint64_t seed = 0) {
  std::vector<ThresholdRow> rows;
  for (double lambda : lambda_grid) {
    const SyncReport rep = solve_ss1(SyncProblem(m, CouplingMatrix::uniform(2, lambda)), starts, seed);
    rows.push_back({lambda, static_cast<int>(rep.solutions.size()), rep.degenerate});
  }
  return rows;
}

inline double bubble_constant(int m) { return std::pow(m * (m - 2.0), (m - 2.0) / 4.0); }

/// U_{delta,y}(x) = c_m delta^{(m-2)/2} / (delta^2 + |x-y|^2)^{(m-2)/2}.
inline double bubble_value(int m, double delta, std::span<const double> y, std::span<const double> x) {
  if (!(delta > 0.0)) throw std::invalid_argument("bubble_value: delta must be > 0");
  if (x.size() != static_cast<std::size_t>(m) || y.size() != x.size()) {
    throw std::invalid_argument("bubble_value: points must lie in R^m");
  }
  double r2 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) r2 += (x[k] - y[k]) * (x[k] - y[k]);
  const double k = 0.5 * (m - 2.0);
  return bubble_constant(m) * std::pow(delta, k) / std::pow(delta * delta + r2, k);
}

/// max over the samples of |-Delta U - U^{2*-1}|, with Delta U = U'' + (m-1) U'/r
/// differentiated by hand in the radial variable.
inline double bubble_residual(int m, double delta, std::span<const double> y,
                              const std::vector<std::vector<double>>& samples) {
  const double k = 0.5 * (m - 2.0);
  const double c = bubble_constant(m) * std::pow(delta, k);
  const double p = 2.0 * m / (m - 2.0);
  double worst = 0.0;
  for (const auto& x : samples) {
    const double u = bubble_value(m, delta, y, x);
    double r2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) r2 += (x[i] - y[i]) * (x[i] - y[i]);
    const double q = delta * delta + r2;
    const double du_over_r = -2.0 * k * c * std::pow(q, -k - 1.0);
    const double d2u = -2.0 * k * c * std::pow(q, -k - 1.0) + 4.0 * k * (k + 1.0) * c * r2 * std::pow(q, -k - 2.0);
    const double lap = d2u + (m - 1.0) * du_over_r;
    worst = std::max(worst, std::abs(-lap - std::pow(u, p - 1.0)));
  }
  return worst;
}

/// Uniform samples from the ball of the given radius in R^m.
inline std::vector<std::vector<double>> random_ball_points(int m, int count, double radius, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<double>> pts;
  for (int s = 0; s < count; ++s) {
    std::vector<double> x(m);
    double n2 = 0.0;
    for (double& v : x) {
      v = normal(rng);
      n2 += v * v;
    }
    const double r = radius * std::pow(unif(rng), 1.0 / m) / std::sqrt(n2);
    for (double& v : x) v *= r;
    pts.push_back(std::move(x));
  }
  return pts;
}

}  // namespace yamabe
