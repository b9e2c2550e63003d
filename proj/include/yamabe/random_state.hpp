#pragma once

/// \file
/// Reproducible random states for property checks: component i lives on
/// the i-th equal-measure piece, widened by a random overlap into its
/// neighbours, with a random smooth modulation and amplitude.

#include <cmath>
#include <numbers>
#include <random>

#include "yamabe/solver.hpp"

namespace yamabe {

struct RandomStateOptions {
  double max_overlap = 0.25;  ///< widening of each piece, as a fraction of its length
  int modes = 3;
  double modulation = 0.3;
  double log10_amplitude = 1.0;  ///< amplitudes drawn from 10^[-a, a]
};

inline SystemState random_state(const GridPtr& grid, const CouplingMatrix& coupling, std::mt19937_64& rng,
                                const RandomStateOptions& opts = {}) {
  const Grid& g = *grid;
  const int ell = coupling.ell();
  const std::vector<double> br = equal_measure_breaks(g, ell);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Profile> comps;
  for (int i = 0; i < ell; ++i) {
    const double len = br[i + 1] - br[i];
    const double a = i == 0 ? g.nodes.front() : br[i] - opts.max_overlap * len * unit(rng);
    const double b = i == ell - 1 ? g.nodes.back() : br[i + 1] + opts.max_overlap * len * unit(rng);
    const bool free_left = i == 0, free_right = i == ell - 1;
    std::vector<double> coef(opts.modes), phase(opts.modes);
    for (int k = 0; k < opts.modes; ++k) {
      coef[k] = opts.modulation * (2.0 * unit(rng) - 1.0) / (k + 1);
      phase[k] = 2.0 * std::numbers::pi * unit(rng);
    }
    const double amp = std::pow(10.0, opts.log10_amplitude * (2.0 * unit(rng) - 1.0));
    comps.push_back(Profile::sample(grid, [&](double t) {
      if (t < a || t > b) return 0.0;
      const double x = (t - a) / (b - a);
      double shape;
      if (free_left && free_right) shape = 1.0;
      else if (free_left) shape = std::pow(std::cos(0.5 * std::numbers::pi * x), 2);
      else if (free_right) shape = std::pow(std::sin(0.5 * std::numbers::pi * x), 2);
      else shape = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * x));
      double mod = 1.0;
      for (int k = 0; k < opts.modes; ++k) mod += coef[k] * std::cos((k + 1) * std::numbers::pi * x + phase[k]);
      return amp * shape * mod;
    }));
  }
  return SystemState(std::move(comps), coupling);
}

}  // namespace yamabe
