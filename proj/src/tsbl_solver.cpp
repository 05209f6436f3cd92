#include "tsbl/tsbl_solver.hpp"

#include <cmath>

#include "block_posterior.hpp"
#include "tsbl/block_model.hpp"

namespace tsbl {

namespace {

constexpr double kLambdaFloor = 1e-12;

struct StepOutput {
  Hyperparams hyper;
  PosteriorMoments moments;
  double cost_at_input = 0.0;
};

// Shared by the public step and the solve loop so the loop can reuse the
// factorization's cost value instead of recomputing it.
StepOutput em_step_impl(const MmvProblem& problem, const Hyperparams& hyper,
                        const TsblOptions& opts) {
  opts.validate();
  hyper.validate(problem.m(), problem.l());
  const Index n = problem.n(), m = problem.m(), l = problem.l();

  auto bp = detail::compute_block_posterior(problem, hyper, /*want_blocks=*/true);
  if (bp.active.empty())
    throw std::invalid_argument("tsbl_em_step: no active hyperparameters left");

  const Matrix& b = hyper.b_mat;
  auto b_llt = spd_llt(b, "tsbl_em_step B");

  // Row variances from the expected row second moments S_i = Sigma_i + mu_i mu_i^T.
  Vector gamma_new = Vector::Zero(m);
  for (Index i : bp.active) {
    Matrix s_i = bp.sigma_blocks[static_cast<std::size_t>(i)] +
                 bp.mu.segment(i * l, l) * bp.mu.segment(i * l, l).transpose();
    gamma_new[i] = b_llt.solve(s_i).trace() / static_cast<double>(l);
  }

  // Shared correlation matrix: average of S_i / gamma_i over the active set.
  Matrix b_new = Matrix::Zero(l, l);
  for (Index i : bp.active) {
    Matrix s_i = bp.sigma_blocks[static_cast<std::size_t>(i)] +
                 bp.mu.segment(i * l, l) * bp.mu.segment(i * l, l).transpose();
    b_new += s_i / gamma_new[i];
  }
  b_new /= static_cast<double>(bp.active.size());
  b_new = symmetrize(std::move(b_new));

  double lambda_new = hyper.lambda;
  if (opts.lambda_policy.kind == LambdaPolicy::Kind::Learned) {
    Matrix x_mean(m, l);
    for (Index i = 0; i < m; ++i) x_mean.row(i) = bp.mu.segment(i * l, l).transpose();
    const double resid = (problem.y() - problem.phi() * x_mean).squaredNorm();
    // Active block i contributes L - Tr(Sigma_i (gamma_i B)^{-1}) to the
    // effective-dimension term; summed over the active set it equals
    // sum_i gamma_i Tr(B W_i), which stays finite as gammas shrink.
    double trace_term = 0.0;
    for (Index i : bp.active)
      trace_term += static_cast<double>(l) -
                    b_llt.solve(bp.sigma_blocks[static_cast<std::size_t>(i)]).trace() /
                        hyper.gamma[i];
    lambda_new = (resid + hyper.lambda * trace_term) / static_cast<double>(n * l);
  }

  PosteriorMoments moments;
  moments.mu = std::move(bp.mu);
  moments.sigma_blocks = std::move(bp.sigma_blocks);
  return {Hyperparams{std::move(gamma_new), std::move(b_new), lambda_new},
          std::move(moments), bp.cost};
}

}  // namespace

void TsblOptions::validate() const {
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (!(gamma_tol > 0.0)) throw std::invalid_argument("gamma_tol must be positive");
  if (prune_thresh < 0.0) throw std::invalid_argument("prune_thresh must be nonnegative");
  if (init_gamma <= 0.0) throw std::invalid_argument("init_gamma must be positive");
  if (lambda_policy.kind == LambdaPolicy::Kind::Fixed && !(lambda_policy.value > 0.0))
    throw std::invalid_argument("fixed lambda must be positive");
}

double default_lambda_init(const MmvProblem& problem) {
  const double mean_row_power =
      problem.y().rowwise().squaredNorm().mean();
  return 1e-2 * mean_row_power / static_cast<double>(problem.n());
}

std::pair<Hyperparams, PosteriorMoments> tsbl_em_step(const MmvProblem& problem,
                                                      const Hyperparams& hyper,
                                                      const TsblOptions& opts) {
  auto out = em_step_impl(problem, hyper, opts);
  return {std::move(out.hyper), std::move(out.moments)};
}

SolverResult tsbl_solve(const MmvProblem& problem, const TsblOptions& opts) {
  opts.validate();
  const Index m = problem.m(), l = problem.l();

  Hyperparams hyper;
  hyper.gamma = Vector::Constant(m, opts.init_gamma);
  hyper.b_mat = Matrix::Identity(l, l);
  hyper.lambda = opts.lambda_policy.kind == LambdaPolicy::Kind::Fixed
                     ? opts.lambda_policy.value
                     : default_lambda_init(problem);

  SolverResult result;
  while (result.iterations < opts.max_iters) {
    auto step = em_step_impl(problem, hyper, opts);
    result.cost_trace.push_back(step.cost_at_input);
    ++result.iterations;

    Hyperparams next = std::move(step.hyper);
    if (opts.lambda_policy.kind == LambdaPolicy::Kind::Learned)
      next.lambda = std::max(next.lambda, kLambdaFloor);
    // Pruning is permanent: a zeroed gamma never re-enters the model.
    for (Index i = 0; i < m; ++i)
      if (next.gamma[i] < opts.prune_thresh) next.gamma[i] = 0.0;

    const double delta = (next.gamma - hyper.gamma).cwiseAbs().maxCoeff();
    hyper = std::move(next);

    if ((hyper.gamma.array() > 0.0).count() == 0) {
      result.converged = true;  // empty model is a fixed point
      break;
    }
    if (delta < opts.gamma_tol) {
      result.converged = true;
      break;
    }
  }

  result.x_hat = map_estimate(problem, hyper);
  for (Index i = 0; i < m; ++i)
    if (hyper.gamma[i] > 0.0) result.active_set.push_back(i);
  result.hyper = std::move(hyper);
  return result;
}

}  // namespace tsbl
