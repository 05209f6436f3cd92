#pragma once

#include <random>

#include "tsbl/types.hpp"

namespace testutil {

using tsbl::Index;
using tsbl::Matrix;
using tsbl::Vector;

inline Matrix random_matrix(std::mt19937& rng, Index rows, Index cols) {
  std::normal_distribution<double> gauss;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = gauss(rng);
  return m;
}

inline Matrix random_unit_columns(std::mt19937& rng, Index rows, Index cols) {
  Matrix m = random_matrix(rng, rows, cols);
  for (Index j = 0; j < cols; ++j) m.col(j).normalize();
  return m;
}

// Well-conditioned random SPD matrix with nontrivial off-diagonal structure.
inline Matrix random_spd(std::mt19937& rng, Index n, double diag_boost = 0.5) {
  Matrix a = random_matrix(rng, n, n);
  Matrix s = a * a.transpose() / static_cast<double>(n);
  s.diagonal().array() += diag_boost;
  return s;
}

// Correlation matrix of a first-order autoregression: entries rho^|i-j|.
inline Matrix ar1_correlation(Index l, double rho) {
  Matrix b(l, l);
  for (Index i = 0; i < l; ++i)
    for (Index j = 0; j < l; ++j) b(i, j) = std::pow(rho, std::abs(double(i - j)));
  return b;
}

inline Vector random_gamma(std::mt19937& rng, Index m, double lo = 0.5, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector g(m);
  for (Index i = 0; i < m; ++i) g[i] = u(rng);
  return g;
}

}  // namespace testutil
