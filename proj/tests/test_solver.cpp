#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "yamabe/solver.hpp"

using namespace yamabe;
using std::numbers::pi;

namespace {

const double kS4Energy = 8 * pi * pi / 3;
const double kS3Energy = std::pow(0.75, 1.5) * 2 * pi * pi / 3;

SystemState constant_state(const GridPtr& g) {
  return normalize(SystemState({Profile::sample(g, [](double) { return 1.0; })}, CouplingMatrix::uniform(1, 0.0)));
}

double sum_norms(const SolveResult& r) {
  double s = 0.0;
  for (const auto& u : r.state.components) s += norm_g_squared(u);
  return s;
}

std::size_t nearest_node(const Grid& g, double t) { return static_cast<std::size_t>(std::lround(t / g.spacing)); }

}  // namespace

TEST(SolverOptions, Validation) {
  SolverOptions o;
  EXPECT_NO_THROW(o.validate());
  o.grad_tol = 0.0;
  EXPECT_THROW(o.validate(), std::invalid_argument);
  o = {};
  o.backtrack = 1.0;
  EXPECT_THROW(o.validate(), std::invalid_argument);
  o = {};
  o.armijo_c = 0.0;
  EXPECT_THROW(o.validate(), std::invalid_argument);
}

TEST(Minimize, ConstantStartOnS4) {
  const SolveResult r = minimize(constant_state(build_grid(SphereGeometry::make(3, 2), 1024)));
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.energy, kS4Energy, 5e-3 * kS4Energy);
}

TEST(Minimize, ConstantStartOnS3) {
  const SolveResult r = minimize(constant_state(build_grid(SphereGeometry::make(2, 2), 1024)));
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.energy, kS3Energy, 5e-3 * kS3Energy);
}

TEST(Minimize, BumpStartReachesConstant) {
  const GridPtr g = build_grid(SphereGeometry::make(3, 2), 512);
  const SolveResult r = minimize(initial_state(g, CouplingMatrix::uniform(1, 0.0)));
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.energy, kS4Energy, 5e-3 * kS4Energy);
  for (double x : r.state.components[0].values) EXPECT_NEAR(x, std::sqrt(2.0), 1e-3);
}

TEST(Minimize, ConvergedResultInvariants) {
  const GridPtr g = build_grid(SphereGeometry::make(2, 3), 256);
  const SolverOptions opts;
  const SolveResult r = minimize(initial_state(g, CouplingMatrix::uniform(2, -10.0)), opts);
  ASSERT_TRUE(r.converged);
  EXPECT_LE(r.grad_norm, opts.grad_tol * r.energy);
  EXPECT_NEAR(r.energy, sum_norms(r) / g->dim, 1e-6 * r.energy);
  const auto res = nehari_residuals(r.state);
  const auto c = nehari_coefficients(r.state);
  for (int i = 0; i < 2; ++i) {
    EXPECT_LE(std::abs(res[i]), 1e-8 * c.a[i]);
    EXPECT_LE(c.a[i], c.b[i]);  // ||u_i||^2 <= int |u_i|^{2*} on the Nehari set
    EXPECT_TRUE(std::isfinite(r.coupling_integrals(0, 1)));
  }
  for (bool s : r.single_signed) EXPECT_TRUE(s);
  for (const auto& u : r.state.components)
    for (double x : u.values) EXPECT_GE(x, 0.0);
}

TEST(Minimize, PsiNonIncreasingAlongIterates) {
  const GridPtr g = build_grid(SphereGeometry::make(2, 2), 256);
  const SystemState start = initial_state(g, CouplingMatrix::uniform(2, -4.0));
  double prev = psi(start).value;
  for (int k = 1; k <= 12; ++k) {
    SolverOptions o;
    o.max_iters = k;
    const double e = minimize(start, o).energy;
    EXPECT_LE(e, prev + kPsiRoundoff * std::abs(prev)) << k;
    prev = e;
  }
}

TEST(Minimize, CompetitiveEnergyBelowSegregatedBound) {
  const GridPtr g = build_grid(SphereGeometry::make(2, 2), 256);
  const SolveResult r = minimize(initial_state(g, CouplingMatrix::uniform(2, -10.0)));
  ASSERT_TRUE(r.converged);
  const InterfaceOracle o = optimal_interface_oracle(g, 8);
  EXPECT_LE(r.energy, o.c_sum);
}

TEST(Sweep, ScheduleValidation) {
  const GridPtr g = build_grid(SphereGeometry::make(2, 2), 64);
  EXPECT_THROW(sweep(g, 2, {-1.0, -1.0}), std::invalid_argument);
  EXPECT_THROW(sweep(g, 2, {-1.0, -0.5}), std::invalid_argument);
  EXPECT_THROW(sweep(g, 2, {1.0}), std::invalid_argument);
  EXPECT_THROW(sweep(g, 2, {}), std::invalid_argument);
}

TEST(Sweep, SinglePointMatchesMinimize) {
  const GridPtr g = build_grid(SphereGeometry::make(2, 2), 256);
  const auto s = sweep(g, 2, {-1.0});
  const SolveResult r = minimize(initial_state(g, CouplingMatrix::uniform(2, -1.0)));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].energy, r.energy);
  EXPECT_EQ(s[0].iterations, r.iterations);
}

TEST(Sweep, SegregationOnS4) {
  const GridPtr g = build_grid(SphereGeometry::make(3, 2), 512);
  const auto res = sweep(g, 2, {-1, -4, -16, -64, -256, -1024});
  const InterfaceOracle o = optimal_interface_oracle(g, 16);
  double d0 = 0.0;
  for (std::size_t k = 0; k < res.size(); ++k) {
    ASSERT_TRUE(res[k].converged) << k;
    EXPECT_LE(res[k].energy, o.c_sum);
    double min_a = 1e300;
    for (const auto& u : res[k].state.components) min_a = std::min(min_a, norm_g_squared(u));
    if (k == 0) d0 = 0.5 * min_a;
    EXPECT_GT(min_a, d0);
    if (k > 0) {
      EXPECT_LT(res[k].coupling_integrals(0, 1), res[k - 1].coupling_integrals(0, 1));
      EXPECT_GE(res[k].energy, res[k - 1].energy - 1e-8 * res[k].energy);
    }
  }
}

TEST(Dirichlet, FullIntervalIsScalarGroundState) {
  const GridPtr g = build_grid(SphereGeometry::make(3, 2), 1024);
  const DirichletResult d = dirichlet_least_energy(g, 0.0, pi / 2);
  ASSERT_TRUE(d.solve.converged);
  EXPECT_NEAR(d.c_value, kS4Energy, 5e-3 * kS4Energy);
  for (double x : d.profile.values) EXPECT_NEAR(x, std::sqrt(2.0), 1e-3);
}

TEST(Dirichlet, DomainMonotonicity) {
  const GridPtr g = build_grid(SphereGeometry::make(3, 2), 512);
  const double c5 = dirichlet_least_energy(g, 0, nearest_node(*g, 0.5)).c_value;
  const double c6 = dirichlet_least_energy(g, 0, nearest_node(*g, 0.6)).c_value;
  EXPECT_GT(c5, c6);
  const double d5 = dirichlet_least_energy(g, nearest_node(*g, 1.0), g->cells()).c_value;
  const double d6 = dirichlet_least_energy(g, nearest_node(*g, 0.9), g->cells()).c_value;
  EXPECT_GT(d5, d6);
}

TEST(Dirichlet, SymmetricGeometryMirror) {
  const GridPtr g = build_grid(SphereGeometry::make(3, 3), 256);
  const std::size_t k = 100;
  const double left = dirichlet_least_energy(g, 0, k).c_value;
  const double right = dirichlet_least_energy(g, g->cells() - k, g->cells()).c_value;
  EXPECT_NEAR(left, right, 1e-9 * left);
}

TEST(Dirichlet, ProfileVanishesOutsideInterval) {
  const GridPtr g = build_grid(SphereGeometry::make(2, 2), 256);
  const DirichletResult d = dirichlet_least_energy(g, std::size_t{40}, std::size_t{180});
  for (std::size_t k = 0; k < g->size(); ++k) {
    if (k <= 40 || k >= 180) EXPECT_EQ(d.profile[k], 0.0);
    else EXPECT_GT(d.profile[k], 0.0);
  }
}

TEST(Dirichlet, RejectsBadIntervals) {
  const GridPtr g = build_grid(SphereGeometry::make(2, 2), 256);
  EXPECT_THROW(dirichlet_least_energy(g, std::size_t{10}, std::size_t{15}), std::invalid_argument);
  EXPECT_THROW(dirichlet_least_energy(g, 0.3, 0.2), std::invalid_argument);
  EXPECT_THROW(dirichlet_least_energy(g, 0.0, 0.5 + 1e-3), std::invalid_argument);
}

TEST(Oracle, SymmetricGeometryOptimumAtQuarterPi) {
  const GridPtr g = build_grid(SphereGeometry::make(2, 2), 256);
  const InterfaceOracle o = optimal_interface_oracle(g, 8);
  EXPECT_LE(std::abs(o.t_star - pi / 4), g->spacing);
  const std::size_t k = nearest_node(*g, pi / 3);
  const double at_third = dirichlet_least_energy(g, 0, k).c_value + dirichlet_least_energy(g, k, g->cells()).c_value;
  EXPECT_LE(o.c_sum, at_third);
  for (const auto& [idx, v] : o.scanned) EXPECT_GE(v, o.c_sum);
}

TEST(Oracle, ResolutionMustDivideGrid) {
  const GridPtr g = build_grid(SphereGeometry::make(2, 2), 256);
  EXPECT_THROW(optimal_interface_oracle(g, 7), std::invalid_argument);
  EXPECT_THROW(optimal_interface_oracle(g, 0), std::invalid_argument);
}

TEST(Psi, DisjointDirichletPairIsAdditive) {
  const GridPtr g = build_grid(SphereGeometry::make(2, 2), 256);
  const std::size_t k = 128;
  const DirichletResult a = dirichlet_least_energy(g, 0, k), b = dirichlet_least_energy(g, k, g->cells());
  const SystemState s({a.profile, b.profile}, CouplingMatrix::uniform(2, -50.0));
  const PsiValue v = psi(s);
  ASSERT_TRUE(v.ok());
  EXPECT_NEAR(v.value, a.solve.energy + b.solve.energy, 1e-10 * v.value);
}

TEST(InitialState, BumpsAreDisjointWithEqualMeasure) {
  const GridPtr g = build_grid(SphereGeometry::make(3, 2), 512);
  const auto bumps = disjoint_bumps(g, 3);
  ASSERT_EQ(bumps.size(), 3u);
  for (std::size_t k = 0; k < g->size(); ++k) {
    int nonzero = 0;
    for (const auto& b : bumps) nonzero += b[k] > 0.0;
    EXPECT_LE(nonzero, 1);
  }
  const auto br = equal_measure_breaks(*g, 3);
  ASSERT_EQ(br.size(), 4u);
  EXPECT_EQ(br.front(), 0.0);
  EXPECT_EQ(br.back(), pi / 2);
}
