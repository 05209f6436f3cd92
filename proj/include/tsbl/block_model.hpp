#pragma once

#include "tsbl/types.hpp"

// Block-space view of the MMV model: stacking the rows of X turns
// Y = Phi X + V into y = D x + v with D = Phi (x) I_L and a block-diagonal
// prior covariance whose i-th block is gamma_i * B. The solvers never build
// D explicitly; build_block_dictionary exists for tests, small problems and
// any caller that wants the expanded operator.

namespace tsbl {

inline constexpr std::size_t kDefaultBlockDictionaryCap = std::size_t{1} << 25;

// Kronecker expansion Phi (x) I_L, size NL x ML. Throws std::length_error
// when the expanded element count exceeds max_elements; at that scale the
// N x M space solver is the right tool.
Matrix build_block_dictionary(const Matrix& phi, Index l,
                              std::size_t max_elements = kDefaultBlockDictionaryCap);

// Negative log marginal likelihood (up to constants):
//   y^T Sigma_y^{-1} y + log|Sigma_y|,  Sigma_y = lambda I + D Sigma_0 D^T.
// Evaluated through a Cholesky factorization, never an explicit inverse.
double cost(const MmvProblem& problem, const Hyperparams& hyper);

// Posterior mean and the M diagonal L x L covariance blocks. The full ML x ML
// covariance is never materialized; the EM updates only touch the blocks.
PosteriorMoments posterior_moments(const MmvProblem& problem, const Hyperparams& hyper);

// MAP source estimate at fixed hyperparameters, reshaped to M x L.
// Rows with gamma_i = 0 are exactly zero.
Matrix map_estimate(const MmvProblem& problem, const Hyperparams& hyper);

}  // namespace tsbl
