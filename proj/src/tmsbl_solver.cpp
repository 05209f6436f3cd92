#include "tsbl/tmsbl_solver.hpp"

#include <cmath>

#include "mn_iteration.hpp"
#include "tsbl/tsbl_solver.hpp"

namespace tsbl {

namespace {
constexpr double kLambdaFloor = 1e-12;
}

void TmsblOptions::validate() const {
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (!(gamma_tol > 0.0)) throw std::invalid_argument("gamma_tol must be positive");
  if (prune_thresh < 0.0) throw std::invalid_argument("prune_thresh must be nonnegative");
  if (init_gamma <= 0.0) throw std::invalid_argument("init_gamma must be positive");
  if (b_policy.kind == BPolicySpec::Kind::Regularized && !(b_policy.eta > 0.0))
    throw std::invalid_argument("regularization weight eta must be positive");
  if (lambda_policy.kind == LambdaPolicy::Kind::Fixed && !(lambda_policy.value > 0.0))
    throw std::invalid_argument("fixed lambda must be positive");
}

Vector tmsbl_gamma_update(const Matrix& x_cur, const Vector& xi_diag, const Matrix& b_inv) {
  if (x_cur.rows() != xi_diag.size())
    throw std::invalid_argument("tmsbl_gamma_update: X rows and xi length differ");
  const Index m = x_cur.rows(), l = x_cur.cols();
  Vector gamma(m);
  for (Index i = 0; i < m; ++i)
    gamma[i] = x_cur.row(i).dot(x_cur.row(i) * b_inv) / static_cast<double>(l) + xi_diag[i];
  return gamma;
}

Matrix estimate_b(const Matrix& x_cur, const Vector& gamma, const BPolicySpec& policy) {
  const Index l = x_cur.cols();
  if (policy.kind == BPolicySpec::Kind::PinnedIdentity) return Matrix::Identity(l, l);

  Matrix accum = Matrix::Zero(l, l);
  for (Index i = 0; i < x_cur.rows(); ++i)
    if (gamma[i] > 0.0)
      accum.noalias() += x_cur.row(i).transpose() * x_cur.row(i) / gamma[i];
  if (policy.kind == BPolicySpec::Kind::Regularized)
    accum.diagonal().array() += policy.eta;

  const double norm = accum.norm();
  if (!(norm > 0.0))
    throw NumericalError("estimate_b: accumulated correlation matrix is zero");
  return symmetrize(accum / norm);
}

double tmsbl_lambda_update(const MmvProblem& problem, const Matrix& x_cur,
                           const Vector& gamma, double lambda_prev, bool low_snr_mod) {
  if (!(lambda_prev > 0.0))
    throw std::invalid_argument("tmsbl_lambda_update: lambda_prev must be positive");
  const Index n = problem.n(), l = problem.l();
  const Matrix& phi = problem.phi();

  const double resid =
      (problem.y() - phi * x_cur).squaredNorm() / static_cast<double>(n * l);

  double trace = 0.0;
  if (low_snr_mod) {
    for (Index r = 0; r < n; ++r) {
      double g_rr = 0.0;
      for (Index i = 0; i < gamma.size(); ++i)
        if (gamma[i] > 0.0) g_rr += gamma[i] * phi(r, i) * phi(r, i);
      trace += g_rr / (lambda_prev + g_rr);
    }
  } else {
    Matrix gram = Matrix::Zero(n, n);
    for (Index i = 0; i < gamma.size(); ++i)
      if (gamma[i] > 0.0)
        gram.noalias() += gamma[i] * phi.col(i) * phi.col(i).transpose();
    Matrix shifted = gram;
    shifted.diagonal().array() += lambda_prev;
    trace = spd_llt(shifted, "lambda update").solve(gram).trace();
  }
  return resid + lambda_prev * trace / static_cast<double>(n);
}

SolverResult tmsbl_solve(const MmvProblem& problem, const TmsblOptions& opts) {
  opts.validate();
  const Index n = problem.n(), m = problem.m(), l = problem.l();

  Vector gamma = Vector::Constant(m, opts.init_gamma);
  double lambda = opts.lambda_policy.kind == LambdaPolicy::Kind::Fixed
                      ? opts.lambda_policy.value
                      : default_lambda_init(problem);
  bool pinned = opts.b_policy.kind == BPolicySpec::Kind::PinnedIdentity;
  Matrix b = Matrix::Identity(l, l);

  SolverResult result;
  while (result.iterations < opts.max_iters) {
    IndexSet active = detail::active_indices(gamma);
    if (active.empty()) {
      result.converged = true;
      break;
    }

    auto it = detail::compute_x_and_xi(problem, gamma, lambda, active, opts.alloc_stats);

    Matrix b_inv;
    if (pinned) {
      b = Matrix::Identity(l, l);
      b_inv = Matrix::Identity(l, l);
    } else {
      bool degenerate = false;
      try {
        b = estimate_b(it.x, gamma, opts.b_policy);
        Eigen::SelfAdjointEigenSolver<Matrix> es(b, Eigen::EigenvaluesOnly);
        degenerate = es.eigenvalues().minCoeff() <= 1e-12 * es.eigenvalues().maxCoeff();
      } catch (const NumericalError&) {
        degenerate = true;
      }
      if (degenerate) {
        // Rank-deficient plain estimate: retry with a tiny ridge, or fall back
        // to identity when the current rows carry no energy at all.
        double tilde_trace = 0.0;
        for (Index i : active) tilde_trace += it.x.row(i).squaredNorm() / gamma[i];
        b = tilde_trace > 0.0
                ? estimate_b(it.x, gamma,
                             BPolicySpec::regularized(1e-6 * tilde_trace /
                                                      static_cast<double>(l)))
                : Matrix::Identity(l, l);
      }
      b_inv = symmetrize(spd_llt(b, "tmsbl_solve B").solve(Matrix::Identity(l, l)));
    }
    if (opts.alloc_stats) opts.alloc_stats->note(l, l);

    Vector gamma_new = tmsbl_gamma_update(it.x, it.xi_diag, b_inv);

    if (opts.lambda_policy.kind == LambdaPolicy::Kind::Learned)
      lambda = std::max(
          tmsbl_lambda_update(problem, it.x, gamma_new, lambda, opts.low_snr_lambda_mod),
          kLambdaFloor);

    for (Index i = 0; i < m; ++i)
      if (gamma_new[i] < opts.prune_thresh) gamma_new[i] = 0.0;
    for (Index i = 0; i < m; ++i)
      if (gamma[i] == 0.0) gamma_new[i] = 0.0;  // pruned rows never re-enter

    const double delta = (gamma_new - gamma).cwiseAbs().maxCoeff();
    gamma = std::move(gamma_new);
    ++result.iterations;

    if (opts.b_identity_switch && !pinned &&
        static_cast<Index>(detail::active_indices(gamma).size()) < n) {
      pinned = true;
    }

    if (opts.on_iterate) opts.on_iterate(result.iterations, gamma, it.x);

    if (delta < opts.gamma_tol) {
      result.converged = true;
      break;
    }
  }

  IndexSet active = detail::active_indices(gamma);
  if (active.empty()) {
    result.x_hat = Matrix::Zero(m, l);
  } else {
    result.x_hat = detail::compute_x_and_xi(problem, gamma, lambda, active,
                                            opts.alloc_stats)
                       .x;
  }
  result.active_set = std::move(active);
  result.hyper = Hyperparams{std::move(gamma), std::move(b), lambda};
  return result;
}

}  // namespace tsbl
