#pragma once

#include <utility>

#include "tsbl/types.hpp"

// Exact EM solver in the stacked block space. Each iteration factorizes the
// NL x NL marginal covariance, so cost per iteration grows quickly with L;
// for large problems prefer tmsbl_solve, which stays in the N x M space.

namespace tsbl {

struct TsblOptions {
  int max_iters = 2000;
  double gamma_tol = 1e-8;       // stop when max_i |delta gamma_i| falls below
  double prune_thresh = 1e-5;    // gammas below this are removed permanently
                                 // (0 disables pruning)
  LambdaPolicy lambda_policy{};  // learned by default
  double init_gamma = 1.0;      // flat start; B always starts at identity

  void validate() const;
};

// One EM pass at the given hyperparameters. Returns the updated
// hyperparameters together with the posterior moments they were computed
// from (the moments at the *input* hyperparameters). The row-variance update
// consumes the previous B; the correlation update consumes the fresh gammas
// and averages over the active set only; lambda moves only under the learned
// policy and is returned unfloored.
std::pair<Hyperparams, PosteriorMoments> tsbl_em_step(const MmvProblem& problem,
                                                      const Hyperparams& hyper,
                                                      const TsblOptions& opts);

SolverResult tsbl_solve(const MmvProblem& problem, const TsblOptions& opts = {});

// Scale-aware default for a learned lambda start.
double default_lambda_init(const MmvProblem& problem);

}  // namespace tsbl
