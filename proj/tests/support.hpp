#pragma once

#include <cmath>
#include <cstring>
#include <random>

#include "saddle/linalg.hpp"

namespace testing_support {

inline saddle::Matrix random_rotation2(double theta) {
  saddle::Matrix q(2, 2);
  q(0, 0) = std::cos(theta);
  q(1, 0) = std::sin(theta);
  q(0, 1) = -std::sin(theta);
  q(1, 1) = std::cos(theta);
  return q;
}

inline saddle::Matrix random_symmetric(std::size_t n, std::mt19937_64& rng, double scale = 10.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  saddle::Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = u(rng);
  return a;
}

inline bool same_bits(const saddle::Vector& a, const saddle::Vector& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) return false;
  return true;
}

}  // namespace testing_support
