#pragma once

#include <cstdint>
#include <random>

#include "einode/matrix.hpp"

namespace einode::testing {

inline RealMatrix random_matrix(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  RealMatrix a(n, n);
  for (double& v : a.data()) v = u(rng);
  return a;
}

}  // namespace einode::testing
