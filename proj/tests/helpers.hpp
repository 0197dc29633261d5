#pragma once

#include <random>

#include "iph/iph.hpp"

namespace testing_helpers {

/// Dense random PH representation: Dirichlet initial vector, off-diagonal
/// rates in (0, scale], exit rates in (0, scale].
inline iph::PHRepresentation random_rep(int p, std::mt19937_64& gen, double scale = 1.0) {
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  std::exponential_distribution<double> expo(1.0);
  iph::Vector pi(p);
  for (int k = 0; k < p; ++k) pi(k) = expo(gen);
  pi /= pi.sum();
  iph::Matrix T = iph::Matrix::Zero(p, p);
  for (int k = 0; k < p; ++k) {
    double out = 0.0;
    for (int l = 0; l < p; ++l)
      if (l != k) out += T(k, l) = scale * unif(gen);
    T(k, k) = -out - scale * unif(gen);
  }
  return iph::PHRepresentation(pi, T);
}

inline iph::Matrix random_matrix(int p, std::mt19937_64& gen, double lo, double hi) {
  std::uniform_real_distribution<double> unif(lo, hi);
  iph::Matrix A(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) A(i, j) = unif(gen);
  return A;
}

inline double max_rel_error(const iph::Matrix& got, const iph::Matrix& want) {
  return (got - want).cwiseAbs().maxCoeff() / std::max(1e-300, want.cwiseAbs().maxCoeff());
}

}  // namespace testing_helpers
