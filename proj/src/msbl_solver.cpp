#include "tsbl/msbl_solver.hpp"

#include <cmath>

#include "mn_iteration.hpp"
#include "tsbl/tmsbl_solver.hpp"

namespace tsbl {

namespace {
constexpr double kLambdaFloor = 1e-12;
}

MsblStep msbl_em_step(const MmvProblem& problem, const Vector& gamma, double lambda,
                      const TsblOptions& opts) {
  opts.validate();
  if (gamma.size() != problem.m())
    throw std::invalid_argument("msbl_em_step: gamma length != M");
  if ((gamma.array() < 0.0).any())
    throw std::invalid_argument("msbl_em_step: gamma entries must be nonnegative");

  IndexSet active = detail::active_indices(gamma);
  auto it = detail::compute_x_and_xi(problem, gamma, lambda, active);
  const Index m = problem.m(), l = problem.l();
  Vector gamma_new = Vector::Zero(m);
  for (Index i : active)
    gamma_new[i] = it.x.row(i).squaredNorm() / static_cast<double>(l) + it.xi_diag[i];
  return {std::move(gamma_new), std::move(it.x), std::move(it.xi_diag)};
}

SolverResult msbl_solve(
    const MmvProblem& problem, const TsblOptions& opts,
    const std::function<void(int iter, const Vector& gamma, const Matrix& x)>& on_iterate) {
  opts.validate();
  const Index m = problem.m(), l = problem.l();

  Vector gamma = Vector::Constant(m, opts.init_gamma);
  double lambda = opts.lambda_policy.kind == LambdaPolicy::Kind::Fixed
                      ? opts.lambda_policy.value
                      : default_lambda_init(problem);

  SolverResult result;
  while (result.iterations < opts.max_iters) {
    IndexSet active = detail::active_indices(gamma);
    if (active.empty()) {
      result.converged = true;
      break;
    }

    auto it = detail::compute_x_and_xi(problem, gamma, lambda, active);
    Vector gamma_new =
        tmsbl_gamma_update(it.x, it.xi_diag, Matrix::Identity(l, l));

    if (opts.lambda_policy.kind == LambdaPolicy::Kind::Learned)
      lambda = std::max(
          tmsbl_lambda_update(problem, it.x, gamma_new, lambda, /*low_snr_mod=*/false),
          kLambdaFloor);

    for (Index i = 0; i < m; ++i)
      if (gamma_new[i] < opts.prune_thresh) gamma_new[i] = 0.0;
    for (Index i = 0; i < m; ++i)
      if (gamma[i] == 0.0) gamma_new[i] = 0.0;

    const double delta = (gamma_new - gamma).cwiseAbs().maxCoeff();
    gamma = std::move(gamma_new);
    ++result.iterations;

    if (on_iterate) on_iterate(result.iterations, gamma, it.x);

    if (delta < opts.gamma_tol) {
      result.converged = true;
      break;
    }
  }

  IndexSet active = detail::active_indices(gamma);
  if (active.empty()) {
    result.x_hat = Matrix::Zero(m, l);
  } else {
    result.x_hat = detail::compute_x_and_xi(problem, gamma, lambda, active).x;
  }
  result.active_set = std::move(active);
  result.hyper = Hyperparams{std::move(gamma), Matrix::Identity(l, l), lambda};
  return result;
}

}  // namespace tsbl
