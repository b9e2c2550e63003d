#pragma once

/// \file
/// Uniform grids on the orbit interval, nodal profiles, weighted quadrature
/// and the discrete forms built on them.
///
/// Every node k owns the dual cell [theta_k - h/2, theta_k + h/2] clipped to
/// the interval; its quadrature weight is the exact integral of the density
/// over that cell. The gradient part of the energy lives on the primal cells
/// [theta_k, theta_{k+1}] with the density sampled at the cell midpoint. With
/// these two choices the discrete Laplacian is -M^{-1} K, symmetric in the
/// weighted inner product, and its endpoint rows reduce to the ghost-node
/// reflection u_{-1} = u_1.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "yamabe/geometry.hpp"
#include "yamabe/tridiagonal.hpp"

namespace yamabe {

/// Everything the discretization needs to know about a cohomogeneity-one
/// reduction: the orbit interval [0, length], its density, and the constants
/// of the conformal problem posed on it.
struct OrbitModel {
  double length = SphereGeometry::length();
  std::function<double(double)> density;
  double orbit_volume = 1.0;
  double conformal_coeff = 0.0;
  double crit_exp = 6.0;
  int dim = 3;

  static OrbitModel from(const SphereGeometry& g) {
    OrbitModel model;
    model.density = [g](double theta) { return weight(g, theta); };
    model.orbit_volume = g.orbit_volume;
    model.conformal_coeff = g.conformal_coeff;
    model.crit_exp = g.crit_exp;
    model.dim = g.m;
    return model;
  }
};

struct Grid {
  std::vector<double> nodes;
  double spacing = 0.0;
  std::vector<double> weight_values;       ///< density at the nodes
  std::vector<double> midpoint_weights;    ///< density at the primal cell midpoints
  std::vector<double> quadrature_weights;  ///< density integrated over each dual cell
  double orbit_volume = 1.0;
  double conformal_coeff = 0.0;
  double crit_exp = 6.0;
  int dim = 3;
  /// Zero Dirichlet value at the first/last node (set on restricted grids).
  bool pinned_left = false;
  bool pinned_right = false;
  /// Index of nodes[0] in the grid this one was restricted from.
  std::size_t offset = 0;
  std::size_t parent_nodes = 0;
  /// Factor of the Gram matrix of <.,.>_g with pinned rows eliminated.
  TridiagonalCholesky gram;

  std::size_t size() const { return nodes.size(); }
  std::size_t cells() const { return nodes.size() - 1; }
  bool pinned(std::size_t k) const {
    return (pinned_left && k == 0) || (pinned_right && k + 1 == nodes.size());
  }
  /// Lebesgue length of the interval the grid covers.
  double extent() const { return nodes.back() - nodes.front(); }
};

using GridPtr = std::shared_ptr<const Grid>;

struct Profile {
  GridPtr grid;
  std::vector<double> values;

  Profile() = default;
  explicit Profile(GridPtr g) : grid(std::move(g)), values(grid->size(), 0.0) {}
  Profile(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid->size()) {
      throw std::invalid_argument("Profile: " + std::to_string(values.size()) +
                                  " values for a grid of " + std::to_string(grid->size()) +
                                  " nodes");
    }
  }

  template <class F>
  static Profile sample(GridPtr g, F&& f) {
    Profile p(g);
    for (std::size_t k = 0; k < g->size(); ++k) p.values[k] = f(g->nodes[k]);
    return p;
  }

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t k) const { return values[k]; }
  double& operator[](std::size_t k) { return values[k]; }
};

inline void require_same_grid(const Profile& u, const Profile& v) {
  if (u.grid != v.grid) throw std::invalid_argument("profiles live on different grids");
}

namespace detail {

// 8-point Gauss-Legendre rule on [-1, 1].
inline constexpr std::array<double, 8> kGaussNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> kGaussWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

inline double gauss_integral(const std::function<double(double)>& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t q = 0; q < kGaussNodes.size(); ++q) sum += kGaussWeights[q] * f(mid + half * kGaussNodes[q]);
  return half * sum;
}

inline void factor_gram(Grid& g) {
  const std::size_t n = g.size();
  std::vector<double> diag(n, 0.0), off(n - 1, 0.0);
  for (std::size_t c = 0; c + 1 < n; ++c) {
    const double s = g.orbit_volume * g.midpoint_weights[c] / g.spacing;
    diag[c] += s;
    diag[c + 1] += s;
    off[c] = -s;
  }
  for (std::size_t k = 0; k < n; ++k) diag[k] += g.orbit_volume * g.conformal_coeff * g.quadrature_weights[k];
  if (g.pinned_left) {
    diag[0] = 1.0;
    off[0] = 0.0;
  }
  if (g.pinned_right) {
    diag[n - 1] = 1.0;
    off[n - 2] = 0.0;
  }
  g.gram = TridiagonalCholesky(diag, off);
}

}  // namespace detail

/// Uniform grid with N cells on [0, length].
inline GridPtr build_grid(const OrbitModel& model, int N) {
  if (N < 8) throw std::invalid_argument("build_grid: need N >= 8 cells, got " + std::to_string(N));
  if (!model.density) throw std::invalid_argument("build_grid: model has no density");
  auto g = std::make_shared<Grid>();
  const double h = model.length / N;
  g->spacing = h;
  g->orbit_volume = model.orbit_volume;
  g->conformal_coeff = model.conformal_coeff;
  g->crit_exp = model.crit_exp;
  g->dim = model.dim;
  g->nodes.resize(N + 1);
  g->weight_values.resize(N + 1);
  g->quadrature_weights.resize(N + 1);
  g->midpoint_weights.resize(N);
  for (int k = 0; k <= N; ++k) {
    g->nodes[k] = k == N ? model.length : k * h;
    g->weight_values[k] = model.density(g->nodes[k]);
  }
  for (int c = 0; c < N; ++c) {
    const double a = g->nodes[c];
    const double b = g->nodes[c + 1];
    const double mid = 0.5 * (a + b);
    g->midpoint_weights[c] = model.density(mid);
    g->quadrature_weights[c] += detail::gauss_integral(model.density, a, mid);
    g->quadrature_weights[c + 1] += detail::gauss_integral(model.density, mid, b);
  }
  g->parent_nodes = g->nodes.size();
  detail::factor_gram(*g);
  return g;
}

inline GridPtr build_grid(const SphereGeometry& geometry, int N) {
  return build_grid(OrbitModel::from(geometry), N);
}

/// Sub-grid on nodes [lo, hi] of `parent`. Ends that are interior to the
/// parent interval carry a zero Dirichlet value; ends at the orbit-space
/// boundary keep the natural closure.
inline GridPtr restrict_grid(const Grid& parent, std::size_t lo, std::size_t hi) {
  if (hi >= parent.size() || lo >= hi) {
    throw std::invalid_argument("restrict_grid: invalid node range [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "]");
  }
  const std::size_t interior = hi - lo - 1;
  if (interior < 8) {
    throw std::invalid_argument("restrict_grid: interval has " + std::to_string(interior) +
                                " interior nodes, need at least 8");
  }
  auto g = std::make_shared<Grid>();
  auto slice = [&](const std::vector<double>& v, std::size_t a, std::size_t b) {
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(a),
                               v.begin() + static_cast<std::ptrdiff_t>(b));
  };
  g->nodes = slice(parent.nodes, lo, hi + 1);
  g->weight_values = slice(parent.weight_values, lo, hi + 1);
  g->quadrature_weights = slice(parent.quadrature_weights, lo, hi + 1);
  g->midpoint_weights = slice(parent.midpoint_weights, lo, hi);
  g->spacing = parent.spacing;
  g->orbit_volume = parent.orbit_volume;
  g->conformal_coeff = parent.conformal_coeff;
  g->crit_exp = parent.crit_exp;
  g->dim = parent.dim;
  g->pinned_left = lo > 0 || parent.pinned_left;
  g->pinned_right = hi + 1 < parent.size() || parent.pinned_right;
  g->offset = parent.offset + lo;
  g->parent_nodes = parent.parent_nodes;
  detail::factor_gram(*g);
  return g;
}

/// Embeds a profile from a restricted grid into `full` by zero extension.
inline Profile extend_by_zero(const Profile& u, GridPtr full) {
  if (u.grid->offset + u.size() > full->size()) {
    throw std::invalid_argument("extend_by_zero: profile does not fit the target grid");
  }
  Profile out(std::move(full));
  std::copy(u.values.begin(), u.values.end(),
            out.values.begin() + static_cast<std::ptrdiff_t>(u.grid->offset));
  return out;
}

/// orbit_volume * sum_k q_k |u_k|^p.
inline double integrate_power(const Profile& u, double p) {
  const Grid& g = *u.grid;
  double sum = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) sum += g.quadrature_weights[k] * std::pow(std::abs(u[k]), p);
  return g.orbit_volume * sum;
}

/// orbit_volume * sum_k q_k |u_k|^p |v_k|^q.
inline double integrate_product(const Profile& u, const Profile& v, double p, double q) {
  require_same_grid(u, v);
  const Grid& g = *u.grid;
  double sum = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (u[k] == 0.0 || v[k] == 0.0) continue;
    sum += g.quadrature_weights[k] * std::pow(std::abs(u[k]), p) * std::pow(std::abs(v[k]), q);
  }
  return g.orbit_volume * sum;
}

/// Gradient part of <u, v>_g.
inline double stiffness_form(const Profile& u, const Profile& v) {
  require_same_grid(u, v);
  const Grid& g = *u.grid;
  double sum = 0.0;
  for (std::size_t c = 0; c < g.cells(); ++c) {
    sum += g.midpoint_weights[c] * (u[c + 1] - u[c]) * (v[c + 1] - v[c]);
  }
  return g.orbit_volume * sum / g.spacing;
}

/// <u, v>_g = int (u' v' + kappa u v) dmu.
inline double inner_g(const Profile& u, const Profile& v) {
  require_same_grid(u, v);
  const Grid& g = *u.grid;
  double mass = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) mass += g.quadrature_weights[k] * u[k] * v[k];
  return stiffness_form(u, v) + g.conformal_coeff * g.orbit_volume * mass;
}

inline double norm_g_squared(const Profile& u) { return inner_g(u, u); }

/// Weighted L2 inner product sum_k q_k u_k v_k (without orbit_volume).
inline double inner_w(const Profile& u, const Profile& v) {
  require_same_grid(u, v);
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) s += u.grid->quadrature_weights[k] * u[k] * v[k];
  return s;
}

/// (K u)_k where K is the stiffness matrix (includes orbit_volume).
inline std::vector<double> apply_stiffness(const Profile& u) {
  const Grid& g = *u.grid;
  std::vector<double> out(u.size(), 0.0);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    const double flux = g.orbit_volume * g.midpoint_weights[c] * (u[c + 1] - u[c]) / g.spacing;
    out[c] -= flux;
    out[c + 1] += flux;
  }
  return out;
}

/// u'' + [(n2-1) cot - (n1-1) tan] u' in flux form, -M^{-1} K u.
/// At orbit-space endpoints this is the ghost-node reflection closure; at
/// pinned nodes of a restricted grid the operator is not defined and 0 is
/// reported.
inline Profile apply_reduced_laplacian(const Profile& u) {
  const Grid& g = *u.grid;
  if (g.size() < 8) throw std::invalid_argument("apply_reduced_laplacian: grid has fewer than 8 nodes");
  Profile out(u.grid);
  const std::vector<double> ku = apply_stiffness(u);
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (g.pinned(k)) continue;
    out[k] = -ku[k] / (g.orbit_volume * g.quadrature_weights[k]);
  }
  return out;
}

/// Riesz representative: solves <r, v>_g = rhs . v for all nodal v.
/// Entries of rhs at pinned nodes are ignored and r vanishes there.
inline std::vector<double> riesz_solve(const Grid& g, std::vector<double> rhs) {
  if (g.pinned_left) rhs.front() = 0.0;
  if (g.pinned_right) rhs.back() = 0.0;
  g.gram.solve_in_place(rhs);
  return rhs;
}

inline double max_abs(const Profile& u) {
  double m = 0.0;
  for (double x : u.values) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace yamabe
