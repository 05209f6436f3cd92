#pragma once

#include <Eigen/Cholesky>

#include "tsbl/types.hpp"

// Small shared helpers for symmetric positive definite solves. Every SPD
// factorization in the library goes through spd_llt(), which retries once
// with a diagonal jitter of 1e-10 * trace/dim before giving up; EM iterates
// can graze singularity and the jitter keeps a step alive without visibly
// changing the result.

namespace tsbl {

inline Matrix symmetrize(Matrix a) {
  return 0.5 * (a + a.transpose());
}

inline Eigen::LLT<Matrix> spd_llt(const Matrix& a, const char* what) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() == Eigen::Success) return llt;
  const double jitter = 1e-10 * a.trace() / static_cast<double>(a.rows());
  Matrix aj = a;
  aj.diagonal().array() += jitter;
  llt.compute(aj);
  if (llt.info() == Eigen::Success) return llt;
  throw NumericalError(std::string(what) + ": matrix is not positive definite");
}

inline double logdet_from_llt(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace tsbl
