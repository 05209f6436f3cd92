#include "tsbl/block_model.hpp"

#include <limits>

#include "block_posterior.hpp"

namespace tsbl {

MmvProblem::MmvProblem(Matrix phi, Matrix y, std::optional<Truth> truth)
    : phi_(std::move(phi)), y_(std::move(y)), truth_(std::move(truth)) {
  if (phi_.rows() < 1 || y_.cols() < 1)
    throw std::invalid_argument("MmvProblem: need N >= 1 and L >= 1");
  if (phi_.cols() < phi_.rows())
    throw std::invalid_argument("MmvProblem: dictionary must have M >= N");
  if (y_.rows() != phi_.rows())
    throw std::invalid_argument("MmvProblem: Phi and Y row counts differ");
  if (truth_) {
    const Truth& t = *truth_;
    if (t.x_gen.rows() != phi_.cols() || t.x_gen.cols() != y_.cols())
      throw std::invalid_argument("MmvProblem: truth shape mismatch");
    std::vector<bool> in_support(static_cast<std::size_t>(phi_.cols()), false);
    for (Index i : t.support) {
      if (i < 0 || i >= phi_.cols()) throw std::invalid_argument("MmvProblem: support index out of range");
      in_support[static_cast<std::size_t>(i)] = true;
    }
    for (Index i = 0; i < t.x_gen.rows(); ++i) {
      const bool nonzero = t.x_gen.row(i).norm() > 0.0;
      if (nonzero != in_support[static_cast<std::size_t>(i)])
        throw std::invalid_argument("MmvProblem: truth support does not match nonzero rows");
    }
  }
}

bool MmvProblem::unit_norm_columns(double tol) const {
  for (Index j = 0; j < phi_.cols(); ++j)
    if (std::abs(phi_.col(j).norm() - 1.0) > tol) return false;
  return true;
}

void Hyperparams::validate(Index m, Index l) const {
  if (gamma.size() != m) throw std::invalid_argument("Hyperparams: gamma length != M");
  if (b_mat.rows() != l || b_mat.cols() != l)
    throw std::invalid_argument("Hyperparams: B must be L x L");
  if ((gamma.array() < 0.0).any())
    throw std::invalid_argument("Hyperparams: gamma entries must be nonnegative");
  const double scale = std::max(1.0, b_mat.cwiseAbs().maxCoeff());
  if ((b_mat - b_mat.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("Hyperparams: B is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(b_mat, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("Hyperparams: B is not positive definite");
  if (!(lambda >= 0.0)) throw std::invalid_argument("Hyperparams: lambda must be nonnegative");
}

Matrix PosteriorMoments::mean_matrix() const {
  const Index l = sigma_blocks.empty() ? mu.size() : sigma_blocks.front().rows();
  const Index m = mu.size() / l;
  Matrix x(m, l);
  for (Index i = 0; i < m; ++i) x.row(i) = mu.segment(i * l, l).transpose();
  return x;
}

Matrix build_block_dictionary(const Matrix& phi, Index l, std::size_t max_elements) {
  if (l < 1) throw std::invalid_argument("build_block_dictionary: L must be >= 1");
  const std::size_t rows = static_cast<std::size_t>(phi.rows()) * static_cast<std::size_t>(l);
  const std::size_t cols = static_cast<std::size_t>(phi.cols()) * static_cast<std::size_t>(l);
  if (rows != 0 && cols > max_elements / rows)
    throw std::length_error(
        "build_block_dictionary: expanded operator exceeds the element cap; "
        "use the N x M space solver for problems this size");
  Matrix d = Matrix::Zero(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index r = 0; r < phi.rows(); ++r)
    for (Index c = 0; c < phi.cols(); ++c)
      for (Index s = 0; s < l; ++s) d(r * l + s, c * l + s) = phi(r, c);
  return d;
}

double cost(const MmvProblem& problem, const Hyperparams& hyper) {
  hyper.validate(problem.m(), problem.l());
  return detail::compute_block_posterior(problem, hyper, /*want_blocks=*/false).cost;
}

PosteriorMoments posterior_moments(const MmvProblem& problem, const Hyperparams& hyper) {
  hyper.validate(problem.m(), problem.l());
  auto bp = detail::compute_block_posterior(problem, hyper, /*want_blocks=*/true);
  PosteriorMoments out;
  out.mu = std::move(bp.mu);
  out.sigma_blocks = std::move(bp.sigma_blocks);
  return out;
}

Matrix map_estimate(const MmvProblem& problem, const Hyperparams& hyper) {
  hyper.validate(problem.m(), problem.l());
  auto bp = detail::compute_block_posterior(problem, hyper, /*want_blocks=*/false);
  const Index m = problem.m(), l = problem.l();
  Matrix x(m, l);
  for (Index i = 0; i < m; ++i) x.row(i) = bp.mu.segment(i * l, l).transpose();
  return x;
}

}  // namespace tsbl
