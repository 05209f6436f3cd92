#pragma once

#include <functional>

#include "tsbl/types.hpp"

// Fast solver operating in the original N x M space. The expensive block-space
// posterior is replaced by a separable approximation that is exact for B = I
// or vanishing noise; per-iteration work is O(N^2 M + M L^2) and no stacked
// NL x ML object is ever formed.

namespace tsbl {

struct BPolicySpec {
  enum class Kind { Plain, Regularized, PinnedIdentity };
  Kind kind = Kind::Plain;
  double eta = 2.0;  // ridge weight under Regularized

  static BPolicySpec plain() { return {Kind::Plain, 0.0}; }
  static BPolicySpec regularized(double eta) { return {Kind::Regularized, eta}; }
  static BPolicySpec pinned_identity() { return {Kind::PinnedIdentity, 0.0}; }
};

// Test instrumentation: peak element count of dense temporaries allocated by
// a solve, so the complexity contract can be asserted.
struct AllocStats {
  std::size_t peak_elems = 0;
  void note(Index rows, Index cols) {
    peak_elems = std::max(peak_elems,
                          static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  }
};

struct TmsblOptions {
  int max_iters = 2000;
  double gamma_tol = 1e-8;
  double prune_thresh = 1e-5;
  LambdaPolicy lambda_policy{};
  double init_gamma = 1.0;
  BPolicySpec b_policy{};
  bool low_snr_lambda_mod = false;  // replace the Gram matrix by its diagonal
                                    // inside the lambda rule's trace term
  bool b_identity_switch = false;   // pin B = I once fewer than N rows survive

  // Called once per iteration with the post-prune gammas and the iteration's
  // source estimate; used by trajectory tests.
  std::function<void(int iter, const Vector& gamma, const Matrix& x)> on_iterate;
  AllocStats* alloc_stats = nullptr;

  void validate() const;
};

// Row-variance update: gamma_i = X_i B^{-1} X_i^T / L + xi_i. With B = I this
// is exactly the i.i.d.-row rule (squared row norm over L plus xi_i).
Vector tmsbl_gamma_update(const Matrix& x_cur, const Vector& xi_diag, const Matrix& b_inv);

// Correlation estimate accumulated from the current rows:
//   B~ = sum_{gamma_i > 0} X_i^T X_i / gamma_i  (+ eta I when regularized),
// normalized to unit Frobenius norm. PinnedIdentity returns I exactly.
// The plain estimate can be singular when fewer than L distinct rows remain;
// callers that need B^{-1} must fall back to the regularized form.
Matrix estimate_b(const Matrix& x_cur, const Vector& gamma, const BPolicySpec& policy);

// Noise-variance update:
//   lambda = ||Y - Phi X||_F^2 / (NL)
//          + lambda_prev/N * Tr[G (lambda_prev I + G)^{-1}],  G = Phi Gamma Phi^T,
// with G replaced by diag(G) in both occurrences of the trace term when
// low_snr_mod is set.
double tmsbl_lambda_update(const MmvProblem& problem, const Matrix& x_cur,
                           const Vector& gamma, double lambda_prev, bool low_snr_mod);

SolverResult tmsbl_solve(const MmvProblem& problem, const TmsblOptions& opts = {});

}  // namespace tsbl
