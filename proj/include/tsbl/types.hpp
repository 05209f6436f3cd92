#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <vector>

// Core data types shared by the solvers and the benchmark harness.
//
// Matrix layout convention used throughout: for an M x L source matrix X,
// the stacked vector x concatenates the rows of X, i.e. x = vec(X^T) with
// vec() stacking columns. Block i of x (length L) is row i of X.

namespace tsbl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using IndexSet = std::vector<Index>;  // kept sorted ascending

// Thrown when a factorization fails or hyperparameters are numerically broken.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Truth {
  Matrix x_gen;        // M x L generating sources
  IndexSet support;    // indices of the K nonzero rows
  double snr_db = std::numeric_limits<double>::infinity();
};

// An MMV recovery instance: Y = Phi * X + V with row-sparse X.
class MmvProblem {
 public:
  MmvProblem(Matrix phi, Matrix y, std::optional<Truth> truth = std::nullopt);

  const Matrix& phi() const { return phi_; }
  const Matrix& y() const { return y_; }
  Index n() const { return phi_.rows(); }
  Index m() const { return phi_.cols(); }
  Index l() const { return y_.cols(); }

  bool has_truth() const { return truth_.has_value(); }
  const Truth& truth() const { return truth_.value(); }

  // True when every dictionary column has unit Euclidean norm (the library's
  // hypersphere generator guarantees this; free-form input may not).
  bool unit_norm_columns(double tol = 1e-8) const;

 private:
  Matrix phi_;
  Matrix y_;
  std::optional<Truth> truth_;
};

// Hyperparameters of the Gaussian row prior: per-row variance scales gamma,
// a shared L x L correlation matrix, and the noise variance lambda.
struct Hyperparams {
  Vector gamma;    // length M, entries >= 0
  Matrix b_mat;    // L x L symmetric positive definite
  double lambda = 0.0;

  // Throws std::invalid_argument when sizes or positivity constraints fail.
  void validate(Index m, Index l) const;
};

// Posterior mean and the diagonal L x L covariance blocks in block space.
struct PosteriorMoments {
  Vector mu;                          // length M*L, block i = row i of the mean
  std::vector<Matrix> sigma_blocks;   // M blocks, each L x L

  Matrix mean_matrix() const;         // reshape mu to M x L
};

struct SolverResult {
  Matrix x_hat;                    // M x L, rows off the active set exactly zero
  Hyperparams hyper;               // final hyperparameters (pruned gammas are 0)
  IndexSet active_set;
  std::vector<double> cost_trace;  // marginal-likelihood cost per iteration
                                   // (recorded only by the block-space solver)
  int iterations = 0;
  bool converged = false;
};

struct LambdaPolicy {
  enum class Kind { Fixed, Learned };
  Kind kind = Kind::Learned;
  double value = 1e-9;  // used when fixed

  static LambdaPolicy fixed(double v) { return {Kind::Fixed, v}; }
  static LambdaPolicy learned() { return {Kind::Learned, 0.0}; }
};

}  // namespace tsbl
