#pragma once

#include "tsbl/linalg.hpp"
#include "tsbl/tmsbl_solver.hpp"
#include "tsbl/types.hpp"

// Per-iteration algebra shared by tmsbl_solve and msbl_solve. Keeping both
// solvers on this single code path makes the B = I equivalence between them
// exact, not just approximate.

namespace tsbl::detail {

struct MnIterate {
  Matrix x;        // M x L, rows off the active set zero
  Vector xi_diag;  // length M, posterior variance scale per row
};

// X = Gamma Phi^T (lambda I + Phi Gamma Phi^T)^{-1} Y restricted to the
// active set, and xi_i = gamma_i - gamma_i^2 phi_i^T (lambda I + G)^{-1} phi_i.
inline MnIterate compute_x_and_xi(const MmvProblem& problem, const Vector& gamma,
                                  double lambda, const IndexSet& active,
                                  AllocStats* stats = nullptr) {
  const Index n = problem.n(), m = problem.m(), l = problem.l();
  const Matrix& phi = problem.phi();

  Matrix gram = Matrix::Zero(n, n);
  for (Index i : active)
    gram.noalias() += gamma[i] * phi.col(i) * phi.col(i).transpose();
  gram.diagonal().array() += lambda;
  if (stats) stats->note(n, n);

  auto llt = spd_llt(gram, "marginal covariance");

  Matrix z = llt.solve(problem.y());  // N x L
  if (stats) stats->note(n, l);

  Matrix phi_active(n, static_cast<Index>(active.size()));
  for (Index j = 0; j < phi_active.cols(); ++j)
    phi_active.col(j) = phi.col(active[static_cast<std::size_t>(j)]);
  Matrix q = llt.solve(phi_active);  // N x |active|
  if (stats) {
    stats->note(n, phi_active.cols());
    stats->note(m, l);
  }

  MnIterate out;
  out.x = Matrix::Zero(m, l);
  out.xi_diag = Vector::Zero(m);
  for (Index j = 0; j < phi_active.cols(); ++j) {
    const Index i = active[static_cast<std::size_t>(j)];
    const double g = gamma[i];
    out.x.row(i) = g * (phi_active.col(j).transpose() * z);
    out.xi_diag[i] = g - g * g * phi_active.col(j).dot(q.col(j));
  }
  return out;
}

inline IndexSet active_indices(const Vector& gamma) {
  IndexSet active;
  for (Index i = 0; i < gamma.size(); ++i)
    if (gamma[i] > 0.0) active.push_back(i);
  return active;
}

}  // namespace tsbl::detail
