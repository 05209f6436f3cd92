#include "tsbl/metrics.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tsbl/linalg.hpp"

namespace tsbl::metrics {

namespace {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

IndexSet recovered_support(const Matrix& x_hat, double rel_tol) {
  Vector norms(x_hat.rows());
  for (Index i = 0; i < x_hat.rows(); ++i) norms[i] = x_hat.row(i).norm();
  const double cutoff = rel_tol * norms.maxCoeff();
  IndexSet support;
  for (Index i = 0; i < x_hat.rows(); ++i)
    if (norms[i] > cutoff) support.push_back(i);
  return support;
}

IndexSet top_k_rows(const Matrix& x_hat, Index k) {
  if (k < 0 || k > x_hat.rows()) throw std::invalid_argument("top_k_rows: bad k");
  std::vector<Index> order(static_cast<std::size_t>(x_hat.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return x_hat.row(a).squaredNorm() > x_hat.row(b).squaredNorm();
  });
  IndexSet picked(order.begin(), order.begin() + k);
  std::sort(picked.begin(), picked.end());
  return picked;
}

bool is_failure(const Matrix& x_hat, const IndexSet& true_support, Index k,
                FailureRegime regime) {
  if (static_cast<Index>(true_support.size()) != k)
    throw std::invalid_argument("is_failure: k must equal |true_support|");
  IndexSet sorted_truth = true_support;
  std::sort(sorted_truth.begin(), sorted_truth.end());
  const IndexSet got = regime == FailureRegime::Noiseless ? recovered_support(x_hat)
                                                          : top_k_rows(x_hat, k);
  return got != sorted_truth;
}

double mse(const Matrix& x_hat, const Matrix& x_gen) {
  const double ref = x_gen.squaredNorm();
  if (ref == 0.0) throw std::invalid_argument("mse: reference matrix is zero");
  return (x_hat - x_gen).squaredNorm() / ref;
}

double source_condition_number(const Matrix& x_gen, const IndexSet& support) {
  if (support.empty()) throw std::invalid_argument("source_condition_number: empty support");
  Matrix sub(static_cast<Index>(support.size()), x_gen.cols());
  for (Index i = 0; i < sub.rows(); ++i) sub.row(i) = x_gen.row(support[static_cast<std::size_t>(i)]);
  Eigen::JacobiSVD<Matrix> svd(sub);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (smin <= 1e-12 * smax) return std::numeric_limits<double>::infinity();
  return smax / smin;
}

Vector support_stationary_gamma(const Matrix& phi, const Matrix& y_mat,
                                const IndexSet& support, const Matrix& b_mat,
                                double residual_tol) {
  const Index k = static_cast<Index>(support.size());
  const Index l = y_mat.cols();
  if (k < 1 || k > phi.rows())
    throw std::invalid_argument("support_stationary_gamma: need 1 <= K <= N");
  Matrix phi_s(phi.rows(), k);
  for (Index j = 0; j < k; ++j) phi_s.col(j) = phi.col(support[static_cast<std::size_t>(j)]);

  Eigen::ColPivHouseholderQR<Matrix> qr(phi_s);
  if (qr.rank() < k)
    throw std::invalid_argument("support_stationary_gamma: restricted dictionary is rank deficient");
  Matrix x = qr.solve(y_mat);

  const double resid = (phi_s * x - y_mat).norm();
  if (resid > residual_tol * std::max(1.0, y_mat.norm()))
    throw std::invalid_argument("support_stationary_gamma: system inconsistent on this support");

  auto b_llt = spd_llt(b_mat, "support_stationary_gamma B");
  Vector gamma(k);
  for (Index i = 0; i < k; ++i) {
    Vector row = x.row(i).transpose();
    gamma[i] = row.dot(b_llt.solve(row)) / static_cast<double>(l);
  }
  return gamma;
}

double approx_inverse_error(const Matrix& phi, const Vector& gamma, const Matrix& b_mat,
                            double lambda) {
  const Index n = phi.rows(), l = b_mat.rows();
  Matrix gram = Matrix::Zero(n, n);
  for (Index i = 0; i < gamma.size(); ++i)
    if (gamma[i] != 0.0) gram.noalias() += gamma[i] * phi.col(i) * phi.col(i).transpose();

  Matrix stacked = kron(gram, b_mat);
  stacked.diagonal().array() += lambda;
  Matrix stacked_inv =
      spd_llt(stacked, "approx_inverse_error").solve(Matrix::Identity(n * l, n * l));

  Matrix shifted = gram;
  shifted.diagonal().array() += lambda;
  Matrix shifted_inv = spd_llt(shifted, "approx_inverse_error gram").solve(Matrix::Identity(n, n));
  Matrix b_inv = spd_llt(b_mat, "approx_inverse_error B").solve(Matrix::Identity(l, l));

  return (stacked_inv - kron(shifted_inv, b_inv)).norm() / stacked_inv.norm();
}

bool reached_sparsest_support(const Matrix& x_hat, const IndexSet& true_support) {
  IndexSet sorted_truth = true_support;
  std::sort(sorted_truth.begin(), sorted_truth.end());
  return recovered_support(x_hat) == sorted_truth;
}

}  // namespace tsbl::metrics
