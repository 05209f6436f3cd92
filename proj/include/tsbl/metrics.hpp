#pragma once

#include "tsbl/types.hpp"

// Recovery metrics and oracle checks the benchmark harness and the tests
// both rely on.

namespace tsbl::metrics {

enum class FailureRegime { Noiseless, Noisy };

// Indices of the rows counted as nonzero: row norm above rel_tol times the
// largest row norm. An all-zero matrix has an empty recovered support.
IndexSet recovered_support(const Matrix& x_hat, double rel_tol = 1e-8);

// Indices of the k rows with the largest Euclidean norms (ties broken by
// lower index), returned sorted.
IndexSet top_k_rows(const Matrix& x_hat, Index k);

// Noiseless regime: failure iff the recovered support differs from the true
// one. Noisy regime: failure iff the top-k rows by norm differ from it.
bool is_failure(const Matrix& x_hat, const IndexSet& true_support, Index k,
                FailureRegime regime);

// Relative squared Frobenius error ||x_hat - x_gen||_F^2 / ||x_gen||_F^2.
double mse(const Matrix& x_hat, const Matrix& x_gen);

// Condition number of the K x L submatrix of true source rows; infinity when
// the submatrix is (numerically) rank deficient.
double source_condition_number(const Matrix& x_gen, const IndexSet& support);

// Closed-form stationary row variances on a given support of a noiseless
// system: solve Phi_support X = Y and return X_i B^{-1} X_i^T / L per
// support row. Throws when the restricted system is rank deficient or
// inconsistent beyond tolerance.
Vector support_stationary_gamma(const Matrix& phi, const Matrix& y_mat,
                                const IndexSet& support, const Matrix& b_mat,
                                double residual_tol = 1e-8);

// Relative Frobenius error between the inverse of the stacked covariance
// lambda I + (Phi Gamma Phi^T) (x) B and its separable approximation
// (lambda I + Phi Gamma Phi^T)^{-1} (x) B^{-1}. Zero exactly when B = I or
// lambda = 0. Dense; intended for small sizes only.
double approx_inverse_error(const Matrix& phi, const Vector& gamma, const Matrix& b_mat,
                            double lambda);

// True when the recovered (noiseless-rule) support equals the true support,
// i.e. the solver reached the sparsest solution rather than a local minimum.
bool reached_sparsest_support(const Matrix& x_hat, const IndexSet& true_support);

}  // namespace tsbl::metrics
