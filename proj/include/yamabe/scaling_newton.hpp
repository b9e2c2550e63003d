#pragma once

/// \file
/// Damped Newton iteration for the scaling equations
///
///   a_i = b_i s_i^{p-2} + sum_{j != i} d_ij s_i^{p/2-2} s_j^{p/2},  s_i > 0,
///
/// in the variables xi_i = log s_i. Both the Nehari projection (a, b, d are
/// the integrals of a state) and the synchronized-solution system (a = b = 1,
/// d = lambda) are instances.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace yamabe::detail {

struct ScalingSystem {
  Eigen::VectorXd a;
  Eigen::VectorXd b;
  Eigen::MatrixXd d;  ///< symmetric, diagonal ignored
  double p = 6.0;

  Eigen::Index size() const { return a.size(); }
};

enum class NewtonExit { Converged, LeftBox, Stalled, MaxIterations };

struct NewtonOptions {
  int max_iters = 100;
  double tol = 1e-12;
  double log_lower = std::log(1e-6);
  double log_upper = std::log(1e6);
  int max_halvings = 40;
};

struct NewtonOutcome {
  NewtonExit exit = NewtonExit::MaxIterations;
  Eigen::VectorXd xi;
  double residual = 0.0;  ///< max_i |F_i| / scale_i at exit
  int iterations = 0;
};

/// Relative residual F_i = 1 - (sum of right-hand terms) / a_i, together with
/// the magnitude of the terms it was formed from.
inline void scaling_residual(const ScalingSystem& sys, const Eigen::VectorXd& xi, Eigen::VectorXd& f,
                             Eigen::VectorXd& scale) {
  const Eigen::Index n = sys.size();
  const double half = 0.5 * sys.p;
  f.resize(n);
  scale.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double self = sys.b(i) / sys.a(i) * std::exp((sys.p - 2.0) * xi(i));
    double cross = 0.0, cross_abs = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i || sys.d(i, j) == 0.0) continue;
      const double t = sys.d(i, j) / sys.a(i) * std::exp((half - 2.0) * xi(i) + half * xi(j));
      cross += t;
      cross_abs += std::abs(t);
    }
    f(i) = 1.0 - self - cross;
    scale(i) = 1.0 + self + cross_abs;
  }
}

inline Eigen::MatrixXd scaling_jacobian(const ScalingSystem& sys, const Eigen::VectorXd& xi) {
  const Eigen::Index n = sys.size();
  const double half = 0.5 * sys.p;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    jac(i, i) = -(sys.p - 2.0) * sys.b(i) / sys.a(i) * std::exp((sys.p - 2.0) * xi(i));
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i || sys.d(i, j) == 0.0) continue;
      const double t = sys.d(i, j) / sys.a(i) * std::exp((half - 2.0) * xi(i) + half * xi(j));
      jac(i, i) -= (half - 2.0) * t;
      jac(i, j) -= half * t;
    }
  }
  return jac;
}

inline double relative_max(const Eigen::VectorXd& f, const Eigen::VectorXd& scale) {
  return (f.array().abs() / scale.array()).maxCoeff();
}

inline NewtonOutcome scaling_newton(const ScalingSystem& sys, Eigen::VectorXd xi, const NewtonOptions& opts) {
  NewtonOutcome out;
  Eigen::VectorXd f, scale;
  scaling_residual(sys, xi, f, scale);
  double merit = f.squaredNorm();
  for (int it = 0; it < opts.max_iters; ++it) {
    out.iterations = it;
    out.residual = relative_max(f, scale);
    if (out.residual <= opts.tol) {
      out.exit = NewtonExit::Converged;
      out.xi = xi;
      return out;
    }
    const Eigen::MatrixXd jac = scaling_jacobian(sys, xi);
    const Eigen::VectorXd step = jac.completeOrthogonalDecomposition().solve(-f);
    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd trial, f_trial, scale_trial;
    for (int k = 0; k <= opts.max_halvings; ++k, t *= 0.5) {
      trial = xi + t * step;
      if (!trial.allFinite()) continue;
      scaling_residual(sys, trial, f_trial, scale_trial);
      const double m = f_trial.squaredNorm();
      if (std::isfinite(m) && m < merit) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Roundoff floor: no representable step lowers the merit any further.
      out.exit = out.residual <= 1e3 * opts.tol ? NewtonExit::Converged : NewtonExit::Stalled;
      out.xi = xi;
      return out;
    }
    xi = trial;
    f = f_trial;
    scale = scale_trial;
    merit = f.squaredNorm();
    if (xi.minCoeff() < opts.log_lower || xi.maxCoeff() > opts.log_upper) {
      out.exit = NewtonExit::LeftBox;
      out.xi = xi;
      out.iterations = it + 1;
      out.residual = relative_max(f, scale);
      return out;
    }
  }
  out.iterations = opts.max_iters;
  out.residual = relative_max(f, scale);
  out.exit = out.residual <= opts.tol ? NewtonExit::Converged : NewtonExit::MaxIterations;
  out.xi = xi;
  return out;
}

}  // namespace yamabe::detail
