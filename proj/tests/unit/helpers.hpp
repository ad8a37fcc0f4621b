#pragma once

#include <cmath>
#include <random>

#include "swarmkin/core.hpp"

namespace testing {

inline swarmkin::PhaseGrid small_grid(int n = 8, double x_half = 50.0, double v_half = 3.0) {
  return swarmkin::make_square_grid(x_half, v_half, n);
}

inline void fill_random(swarmkin::DistributionField& f, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : f.values) v = u(rng);
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testing
