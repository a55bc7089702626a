#pragma once

#include <cmath>
#include <random>

#include "bnnmix/core.hpp"

namespace bnnmix::testing {

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                              double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

inline Vector gaussian_vector(Eigen::Index size, std::mt19937_64& rng) {
  return gaussian_matrix(size, 1, rng);
}

inline double relative_error(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

}  // namespace bnnmix::testing
