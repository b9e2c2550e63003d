#pragma once

/// \file
/// The system energy
///
///   J(u) = 1/2 sum_i ||u_i||_g^2 - 1/2* sum_i int |u_i|^{2*}
///          - 1/2* sum_{i != j} lambda_ij int |u_i|^{2*/2} |u_j|^{2*/2},
///
/// its gradient, the Nehari residuals, and the scaling projection onto the
/// Nehari set that defines Psi(u) = J(s_u u).

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "yamabe/discretize.hpp"
#include "yamabe/scaling_newton.hpp"

namespace yamabe {

struct CouplingMatrix {
  Eigen::MatrixXd lambda;

  CouplingMatrix() = default;
  explicit CouplingMatrix(Eigen::MatrixXd m) : lambda(std::move(m)) { validate(); }

  static CouplingMatrix uniform(int ell, double value) {
    if (ell < 1) throw std::invalid_argument("CouplingMatrix: ell must be >= 1");
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(ell, ell, value);
    m.diagonal().setZero();
    return CouplingMatrix(std::move(m));
  }

  int ell() const { return static_cast<int>(lambda.rows()); }
  double operator()(int i, int j) const { return lambda(i, j); }

  void validate() const {
    if (lambda.rows() < 1 || lambda.rows() != lambda.cols()) {
      throw std::invalid_argument("CouplingMatrix: need a square matrix of size >= 1");
    }
    for (Eigen::Index i = 0; i < lambda.rows(); ++i) {
      if (lambda(i, i) != 0.0) throw std::invalid_argument("CouplingMatrix: diagonal must be zero");
      for (Eigen::Index j = 0; j < i; ++j) {
        if (lambda(i, j) != lambda(j, i)) throw std::invalid_argument("CouplingMatrix: not symmetric");
      }
    }
  }
};

struct SystemState {
  std::vector<Profile> components;
  CouplingMatrix coupling;

  SystemState() = default;
  SystemState(std::vector<Profile> comps, CouplingMatrix c)
      : components(std::move(comps)), coupling(std::move(c)) {
    if (components.empty()) throw std::invalid_argument("SystemState: no components");
    if (static_cast<int>(components.size()) != coupling.ell()) {
      throw std::invalid_argument("SystemState: " + std::to_string(components.size()) +
                                  " components but coupling of size " + std::to_string(coupling.ell()));
    }
    for (const auto& c_i : components) require_same_grid(c_i, components.front());
  }

  int ell() const { return static_cast<int>(components.size()); }
  const Grid& grid() const { return *components.front().grid; }
  const GridPtr& grid_ptr() const { return components.front().grid; }
};

/// a_i = ||u_i||_g^2, b_i = int |u_i|^{2*}, d_ij = lambda_ij int |u_i|^{2*/2} |u_j|^{2*/2}.
struct NehariCoefficients {
  std::vector<double> a;
  std::vector<double> b;
  Eigen::MatrixXd d;
};

/// int |u_i|^{2*/2} |u_j|^{2*/2} for every pair (diagonal holds int |u_i|^{2*}).
inline Eigen::MatrixXd coupling_integrals(const SystemState& s) {
  const int ell = s.ell();
  const double half = 0.5 * s.grid().crit_exp;
  Eigen::MatrixXd out(ell, ell);
  for (int i = 0; i < ell; ++i) {
    out(i, i) = integrate_power(s.components[i], 2.0 * half);
    for (int j = 0; j < i; ++j) {
      out(i, j) = out(j, i) = integrate_product(s.components[i], s.components[j], half, half);
    }
  }
  return out;
}

inline NehariCoefficients nehari_coefficients(const SystemState& s) {
  const int ell = s.ell();
  NehariCoefficients c;
  c.a.resize(ell);
  c.b.resize(ell);
  const Eigen::MatrixXd integrals = coupling_integrals(s);
  c.d = Eigen::MatrixXd::Zero(ell, ell);
  for (int i = 0; i < ell; ++i) {
    c.a[i] = norm_g_squared(s.components[i]);
    c.b[i] = integrals(i, i);
    for (int j = 0; j < ell; ++j) {
      if (j != i) c.d(i, j) = s.coupling(i, j) * integrals(i, j);
    }
  }
  return c;
}

/// J evaluated at the state whose coefficients are `c`, rescaled by `scales`.
inline double energy_from(const NehariCoefficients& c, double p, const std::vector<double>& scales) {
  const std::size_t ell = c.a.size();
  const double half = 0.5 * p;
  double quad = 0.0, power = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < ell; ++i) {
    quad += c.a[i] * scales[i] * scales[i];
    power += c.b[i] * std::pow(scales[i], p);
    for (std::size_t j = 0; j < ell; ++j) {
      if (j != i && c.d(i, j) != 0.0) cross += c.d(i, j) * std::pow(scales[i] * scales[j], half);
    }
  }
  return 0.5 * quad - (power + cross) / p;
}

inline double energy_J(const SystemState& s) {
  const NehariCoefficients c = nehari_coefficients(s);
  return energy_from(c, s.grid().crit_exp, std::vector<double>(c.a.size(), 1.0));
}

/// partial_i J(u) u_i = a_i - b_i - sum_{j != i} d_ij.
inline std::vector<double> nehari_residuals(const SystemState& s) {
  const NehariCoefficients c = nehari_coefficients(s);
  std::vector<double> r(c.a.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = c.a[i] - c.b[i];
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (j != i) r[i] -= c.d(i, j);
    }
  }
  return r;
}

/// Riesz representatives of partial_i J with respect to <.,.>_g.
inline std::vector<Profile> grad_J(const SystemState& s) {
  const Grid& g = s.grid();
  const int ell = s.ell();
  const double p = g.crit_exp;
  const double half = 0.5 * p;
  std::vector<Profile> out;
  out.reserve(ell);
  std::vector<double> rhs(g.size());
  for (int i = 0; i < ell; ++i) {
    const Profile& u = s.components[i];
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double ui = u[k];
      const double abs_ui = std::abs(ui);
      double force = std::pow(abs_ui, p - 2.0) * ui;
      if (ui != 0.0) {
        const double sign_pow = std::copysign(std::pow(abs_ui, half - 1.0), ui);
        for (int j = 0; j < ell; ++j) {
          if (j == i || s.coupling(i, j) == 0.0) continue;
          force += s.coupling(i, j) * std::pow(std::abs(s.components[j][k]), half) * sign_pow;
        }
      }
      rhs[k] = g.orbit_volume * g.quadrature_weights[k] * force;
    }
    std::vector<double> w = riesz_solve(g, rhs);
    Profile r(u.grid);
    for (std::size_t k = 0; k < g.size(); ++k) r[k] = (g.pinned(k) ? 0.0 : u[k]) - w[k];
    out.push_back(std::move(r));
  }
  return out;
}

enum class ProjectionStatus { Ok, NotInU, NoConvergence };

inline const char* to_string(ProjectionStatus s) {
  switch (s) {
    case ProjectionStatus::Ok: return "ok";
    case ProjectionStatus::NotInU: return "not_in_U";
    case ProjectionStatus::NoConvergence: return "no_convergence";
  }
  return "?";
}

struct Projection {
  ProjectionStatus status = ProjectionStatus::NoConvergence;
  std::vector<double> scales;
  int iterations = 0;

  bool ok() const { return status == ProjectionStatus::Ok; }
};

struct ProjectionOptions {
  int max_iters = 100;
  double tol = 1e-12;
  double scale_min = 1e-6;
  double scale_max = 1e6;
};

/// Hessian of s -> J(s u) at `scales`, congruence-scaled by diag(s_i) and
/// normalized by a_i s_i^2 so that its entries are O(1).
inline Eigen::MatrixXd scaled_scaling_hessian(const NehariCoefficients& c, double p,
                                              const std::vector<double>& s) {
  const Eigen::Index ell = static_cast<Eigen::Index>(c.a.size());
  const double half = 0.5 * p;
  Eigen::MatrixXd h(ell, ell);
  for (Eigen::Index i = 0; i < ell; ++i) {
    double diag = c.a[i] * s[i] * s[i] - (p - 1.0) * c.b[i] * std::pow(s[i], p);
    for (Eigen::Index j = 0; j < ell; ++j) {
      if (j == i) continue;
      const double t = c.d(i, j) * std::pow(s[i] * s[j], half);
      diag -= (half - 1.0) * t;
      h(i, j) = -half * t;
    }
    h(i, i) = diag;
  }
  Eigen::VectorXd norm(ell);
  for (Eigen::Index i = 0; i < ell; ++i) norm(i) = 1.0 / std::sqrt(c.a[i] * s[i] * s[i]);
  return norm.asDiagonal() * h * norm.asDiagonal();
}

namespace detail {

/// phi(xi) = J(e^xi u) from the coefficients.
inline double scaling_energy(const ScalingSystem& sys, const Eigen::VectorXd& xi) {
  const double half = 0.5 * sys.p;
  double v = 0.0;
  for (Eigen::Index i = 0; i < sys.size(); ++i) {
    v += 0.5 * sys.a(i) * std::exp(2.0 * xi(i)) - sys.b(i) / sys.p * std::exp(sys.p * xi(i));
    for (Eigen::Index j = 0; j < sys.size(); ++j) {
      if (j != i) v -= sys.d(i, j) / sys.p * std::exp(half * (xi(i) + xi(j)));
    }
  }
  return v;
}

/// Ascent on phi with saddle-free Newton steps (Hessian eigenvalues taken in
/// absolute value). Used when plain Newton on the scaling equations stalls
/// in a local minimum of its residual; returns a point near the maximizer.
inline Eigen::VectorXd scaling_ascent(const ScalingSystem& sys, Eigen::VectorXd xi, const NewtonOptions& opts) {
  const Eigen::Index n = sys.size();
  const double half = 0.5 * sys.p;
  Eigen::VectorXd f, scale;
  for (int it = 0; it < 50 * opts.max_iters; ++it) {
    scaling_residual(sys, xi, f, scale);
    if (relative_max(f, scale) <= 1e-6) break;
    Eigen::VectorXd grad(n);
    Eigen::MatrixXd hess(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a2 = sys.a(i) * std::exp(2.0 * xi(i));
      grad(i) = a2 * f(i);
      hess(i, i) = 2.0 * a2 - sys.p * sys.b(i) * std::exp(sys.p * xi(i));
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double t = sys.d(i, j) * std::exp(half * (xi(i) + xi(j)));
        hess(i, i) -= half * t;
        hess(i, j) = -half * t;
      }
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hess);
    const double floor = 1e-12 * eig.eigenvalues().cwiseAbs().maxCoeff();
    const Eigen::VectorXd inv = eig.eigenvalues().cwiseAbs().cwiseMax(floor).cwiseInverse();
    const Eigen::VectorXd step = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose() * grad;
    const double v0 = scaling_energy(sys, xi);
    const double slope = grad.dot(step);
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k <= opts.max_halvings; ++k, t *= 0.5) {
      const Eigen::VectorXd trial = xi + t * step;
      const double v = scaling_energy(sys, trial);
      if (std::isfinite(v) && v >= v0 + 1e-4 * t * slope) {
        xi = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted || xi.minCoeff() < opts.log_lower || xi.maxCoeff() > opts.log_upper) break;
  }
  return xi;
}

}  // namespace detail

/// Unique s > 0 with s u on the Nehari set, certified as the interior
/// maximum of s -> J(s u) by a negative definite Hessian.
inline Projection project_coefficients(const NehariCoefficients& c, double p,
                                       const ProjectionOptions& opts = {}) {
  const Eigen::Index ell = static_cast<Eigen::Index>(c.a.size());
  detail::ScalingSystem sys;
  sys.a.resize(ell);
  sys.b.resize(ell);
  sys.d = c.d;
  sys.p = p;
  Eigen::VectorXd xi(ell);
  for (Eigen::Index i = 0; i < ell; ++i) {
    if (!(c.a[i] > 0.0) || !(c.b[i] > 0.0)) {
      throw std::invalid_argument("nehari_project: component " + std::to_string(i) + " is zero");
    }
    sys.a(i) = c.a[i];
    sys.b(i) = c.b[i];
    xi(i) = std::log(c.a[i] / c.b[i]) / (p - 2.0);
  }
  detail::NewtonOptions nopts;
  nopts.max_iters = opts.max_iters;
  nopts.tol = opts.tol;
  nopts.log_lower = std::log(opts.scale_min);
  nopts.log_upper = std::log(opts.scale_max);
  detail::NewtonOutcome res = detail::scaling_newton(sys, xi, nopts);
  if (res.exit == detail::NewtonExit::Stalled || res.exit == detail::NewtonExit::MaxIterations) {
    const int used = res.iterations;
    const Eigen::VectorXd top = detail::scaling_ascent(sys, xi, nopts);
    if (top.minCoeff() < nopts.log_lower || top.maxCoeff() > nopts.log_upper) {
      // The ascent ran off: s -> J(s u) has no interior maximum in range.
      res.exit = detail::NewtonExit::LeftBox;
      res.xi = top;
    } else {
      res = detail::scaling_newton(sys, top, nopts);
    }
    res.iterations += used;
  }

  Projection out;
  out.iterations = res.iterations;
  out.scales.resize(ell);
  for (Eigen::Index i = 0; i < ell; ++i) out.scales[i] = std::exp(res.xi(i));
  switch (res.exit) {
    case detail::NewtonExit::LeftBox: out.status = ProjectionStatus::NotInU; return out;
    case detail::NewtonExit::Stalled:
    case detail::NewtonExit::MaxIterations: out.status = ProjectionStatus::NoConvergence; return out;
    case detail::NewtonExit::Converged: break;
  }
  const Eigen::MatrixXd h = scaled_scaling_hessian(c, p, out.scales);
  Eigen::LLT<Eigen::MatrixXd> llt(-h);
  out.status = llt.info() == Eigen::Success ? ProjectionStatus::Ok : ProjectionStatus::NotInU;
  return out;
}

inline Projection nehari_project(const SystemState& s, const ProjectionOptions& opts = {}) {
  return project_coefficients(nehari_coefficients(s), s.grid().crit_exp, opts);
}

inline SystemState apply_scales(const SystemState& s, const std::vector<double>& scales) {
  SystemState out = s;
  for (int i = 0; i < s.ell(); ++i) {
    for (double& x : out.components[i].values) x *= scales[i];
  }
  return out;
}

/// Each component divided by its g-norm.
inline SystemState normalize(const SystemState& s) {
  std::vector<double> inv(s.ell());
  for (int i = 0; i < s.ell(); ++i) {
    const double n2 = norm_g_squared(s.components[i]);
    if (!(n2 > 0.0)) throw std::invalid_argument("normalize: component " + std::to_string(i) + " is zero");
    inv[i] = 1.0 / std::sqrt(n2);
  }
  return apply_scales(s, inv);
}

struct PsiValue {
  ProjectionStatus status = ProjectionStatus::NoConvergence;
  double value = 0.0;
  /// Scales relative to the normalized state.
  std::vector<double> scales;

  bool ok() const { return status == ProjectionStatus::Ok; }
};

/// Coefficients of the state after each component is divided by its g-norm.
inline NehariCoefficients normalized_coefficients(const NehariCoefficients& c, double p) {
  NehariCoefficients n = c;
  const std::size_t ell = c.a.size();
  const double q = 0.25 * p;
  for (std::size_t i = 0; i < ell; ++i) {
    n.a[i] = 1.0;
    n.b[i] = c.b[i] / std::pow(c.a[i], 0.5 * p);
    for (std::size_t j = 0; j < ell; ++j) {
      if (j != i) n.d(i, j) = c.d(i, j) / std::pow(c.a[i] * c.a[j], q);
    }
  }
  return n;
}

inline PsiValue psi_from(const NehariCoefficients& c, double p, const ProjectionOptions& opts = {}) {
  const NehariCoefficients n = normalized_coefficients(c, p);
  const Projection proj = project_coefficients(n, p, opts);
  PsiValue out;
  out.status = proj.status;
  out.scales = proj.scales;
  if (proj.ok()) out.value = energy_from(n, p, proj.scales);
  return out;
}

/// Psi(u) = J(s_u u) with u normalized to the product of unit g-spheres.
inline PsiValue psi(const SystemState& s, const ProjectionOptions& opts = {}) {
  return psi_from(nehari_coefficients(s), s.grid().crit_exp, opts);
}

}  // namespace yamabe
