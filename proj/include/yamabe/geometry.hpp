#pragma once

/// \file
/// Reduction of the round sphere S^m under O(n1) x O(n2) to the orbit
/// interval [0, pi/2].
///
/// A point (x, y) in S^m, x in R^n1, y in R^n2, is labelled by the angle
/// theta with |x| = cos(theta), |y| = sin(theta). The round metric becomes
/// d theta^2 + cos^2(theta) g_{S^{n1-1}} + sin^2(theta) g_{S^{n2-1}}, so an
/// invariant function u(theta) has |grad u| = |u'(theta)| and the volume
/// element is orbit_volume * cos^{n1-1}(theta) sin^{n2-1}(theta) d theta.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace yamabe {

/// Volume of the unit sphere S^k embedded in R^{k+1}.
inline double unit_sphere_area(int k) {
  const double half = 0.5 * (k + 1);
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

struct SphereGeometry {
  int n1 = 2;
  int n2 = 2;
  int m = 3;
  double conformal_coeff = 0.75;  ///< kappa_m * S_g = m(m-2)/4
  double crit_exp = 6.0;          ///< 2* = 2m/(m-2)
  double orbit_volume = 0.0;      ///< |S^{n1-1}| * |S^{n2-1}|

  static SphereGeometry make(int n1, int n2) {
    if (n1 < 2 || n2 < 2) {
      throw std::invalid_argument("SphereGeometry: n1 and n2 must be >= 2, got (" +
                                  std::to_string(n1) + ", " + std::to_string(n2) + ")");
    }
    SphereGeometry g;
    g.n1 = n1;
    g.n2 = n2;
    g.m = n1 + n2 - 1;
    g.conformal_coeff = g.m * (g.m - 2) / 4.0;
    g.crit_exp = 2.0 * g.m / (g.m - 2.0);
    g.orbit_volume = unit_sphere_area(n1 - 1) * unit_sphere_area(n2 - 1);
    return g;
  }

  /// Length of the orbit interval in the theta coordinate.
  static constexpr double length() { return std::numbers::pi / 2; }
};

/// Volume density of the orbit interval, cos^{n1-1}(theta) sin^{n2-1}(theta).
inline double weight(const SphereGeometry& g, double theta) {
  constexpr double slack = 1e-12;
  if (!(theta >= -slack && theta <= SphereGeometry::length() + slack)) {
    throw std::domain_error("weight: theta = " + std::to_string(theta) +
                            " outside [0, pi/2]");
  }
  if (theta <= 0.0) return g.n2 == 1 ? 1.0 : 0.0;
  if (theta >= SphereGeometry::length()) return g.n1 == 1 ? 1.0 : 0.0;
  return std::pow(std::cos(theta), g.n1 - 1) * std::pow(std::sin(theta), g.n2 - 1);
}

/// orbit_volume * B(n1/2, n2/2) / 2, which is |S^m|.
inline double sphere_volume(const SphereGeometry& g) {
  const double a = 0.5 * g.n1;
  const double b = 0.5 * g.n2;
  const double half_beta = 0.5 * std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
  return g.orbit_volume * half_beta;
}

}  // namespace yamabe
