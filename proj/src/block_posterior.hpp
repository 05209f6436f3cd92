#pragma once

#include <Eigen/Cholesky>

#include "tsbl/linalg.hpp"
#include "tsbl/types.hpp"

// Internal workspace shared by the block-model operations and the block-space
// EM solver. Everything is computed over the active set A = {i : gamma_i > 0}:
//
//   Sigma_y = lambda I_NL + (Phi_A Gamma_A Phi_A^T) (x) B        (NL x NL)
//   u       = Sigma_y^{-1} y
//   mu_i    = gamma_i B U phi_i                 with U = reshape(u, L x N)
//   W_i     = D_i^T Sigma_y^{-1} D_i            with D_i = phi_i (x) I_L
//   Sigma_i = gamma_i B - gamma_i^2 B W_i B
//
// cost = y^T u + log|Sigma_y| falls out of the same factorization.

namespace tsbl::detail {

struct BlockPosterior {
  IndexSet active;
  Vector mu;                         // M*L
  std::vector<Matrix> sigma_blocks;  // M of L x L (zero off the active set)
  std::vector<Matrix> w_blocks;      // M of L x L (zero off the active set)
  double cost = 0.0;
};

inline BlockPosterior compute_block_posterior(const MmvProblem& problem,
                                              const Hyperparams& hyper,
                                              bool want_blocks) {
  const Index n = problem.n(), m = problem.m(), l = problem.l();
  const Matrix& phi = problem.phi();
  const Matrix& b = hyper.b_mat;

  BlockPosterior out;
  out.mu = Vector::Zero(m * l);
  if (want_blocks) {
    out.sigma_blocks.assign(static_cast<std::size_t>(m), Matrix::Zero(l, l));
    out.w_blocks.assign(static_cast<std::size_t>(m), Matrix::Zero(l, l));
  }
  for (Index i = 0; i < m; ++i)
    if (hyper.gamma[i] > 0.0) out.active.push_back(i);

  // Sigma_y assembled block-wise from the N x N weighted Gram matrix.
  Matrix gram = Matrix::Zero(n, n);
  for (Index i : out.active)
    gram.noalias() += hyper.gamma[i] * phi.col(i) * phi.col(i).transpose();
  Matrix sigma_y = Matrix::Zero(n * l, n * l);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) sigma_y.block(r * l, c * l, l, l) = gram(r, c) * b;
  sigma_y.diagonal().array() += hyper.lambda;

  auto llt = spd_llt(sigma_y, "block posterior");

  Vector y = Vector(n * l);
  for (Index r = 0; r < n; ++r) y.segment(r * l, l) = problem.y().row(r).transpose();

  Vector u = llt.solve(y);
  out.cost = y.dot(u) + logdet_from_llt(llt);

  Eigen::Map<const Matrix> u_mat(u.data(), l, n);  // column r = block r of u
  for (Index i : out.active) {
    Vector t = u_mat * phi.col(i);
    out.mu.segment(i * l, l) = hyper.gamma[i] * (b * t);
  }

  if (want_blocks && !out.active.empty()) {
    const Index na = static_cast<Index>(out.active.size());
    Matrix rhs = Matrix::Zero(n * l, na * l);
    for (Index j = 0; j < na; ++j) {
      const Index i = out.active[static_cast<std::size_t>(j)];
      for (Index r = 0; r < n; ++r)
        rhs.block(r * l, j * l, l, l) = phi(r, i) * Matrix::Identity(l, l);
    }
    Matrix sol = llt.solve(rhs);
    for (Index j = 0; j < na; ++j) {
      const Index i = out.active[static_cast<std::size_t>(j)];
      Matrix w = Matrix::Zero(l, l);
      for (Index r = 0; r < n; ++r) w.noalias() += phi(r, i) * sol.block(r * l, j * l, l, l);
      w = symmetrize(std::move(w));
      const double g = hyper.gamma[i];
      out.w_blocks[static_cast<std::size_t>(i)] = w;
      out.sigma_blocks[static_cast<std::size_t>(i)] =
          symmetrize(g * b - g * g * (b * w * b));
    }
  }
  return out;
}

}  // namespace tsbl::detail
