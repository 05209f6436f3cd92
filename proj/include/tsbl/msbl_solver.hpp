#pragma once

#include <functional>

#include "tsbl/tsbl_solver.hpp"
#include "tsbl/types.hpp"

// Baseline solver for i.i.d. rows: the N x M space iteration with the row
// correlation pinned to identity. Kept as an independent loop so that the
// equivalence with tmsbl_solve under a pinned B is a real cross-check.

namespace tsbl {

struct MsblStep {
  Vector gamma;    // updated row variances
  Matrix x;        // source estimate at the input hyperparameters
  Vector xi_diag;  // posterior variance scale per row
};

// One fixed-lambda EM pass: X and xi at (gamma, lambda), then
// gamma_i = ||X_i||^2 / L + xi_i. Lambda is untouched here; msbl_solve owns
// the lambda policy.
MsblStep msbl_em_step(const MmvProblem& problem, const Vector& gamma, double lambda,
                      const TsblOptions& opts);

SolverResult msbl_solve(
    const MmvProblem& problem, const TsblOptions& opts = {},
    const std::function<void(int iter, const Vector& gamma, const Matrix& x)>& on_iterate = {});

}  // namespace tsbl
