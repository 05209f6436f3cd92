#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "support/dense_oracle.hpp"
#include "support/test_util.hpp"
#include "tsbl/block_model.hpp"
#include "tsbl/linalg.hpp"

using namespace tsbl;

TEST_CASE("block dictionary: scalar and identity expansions") {
  Matrix phi(1, 1);
  phi << 2.0;
  Matrix d = build_block_dictionary(phi, 2);
  Matrix expect(2, 2);
  expect << 2, 0, 0, 2;
  CHECK((d - expect).cwiseAbs().maxCoeff() == 0.0);

  Matrix d2 = build_block_dictionary(Matrix::Identity(2, 2), 3);
  CHECK((d2 - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("block dictionary: stacked-row product identity") {
  std::mt19937 rng(7);
  Matrix phi = testutil::random_matrix(rng, 2, 3);
  Matrix x = testutil::random_matrix(rng, 3, 2);
  Matrix d = build_block_dictionary(phi, 2);
  Vector lhs = d * oracle::stack_rows(x);
  Vector rhs = oracle::stack_rows(phi * x);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("block dictionary: element cap") {
  Matrix phi = Matrix::Ones(4, 8);
  CHECK_THROWS_AS(build_block_dictionary(phi, 2, 100), std::length_error);
  CHECK_NOTHROW(build_block_dictionary(phi, 2, 1024));
}

TEST_CASE("cost: scalar cases") {
  Matrix phi(1, 1), y(1, 1);
  phi << 1.0;
  y << 2.0;
  MmvProblem problem(phi, y);

  Hyperparams h1{Vector::Ones(1), Matrix::Identity(1, 1), 0.0};
  CHECK(cost(problem, h1) == doctest::Approx(4.0).epsilon(1e-12));

  Hyperparams h2{Vector::Zero(1), Matrix::Identity(1, 1), 3.0};
  CHECK(cost(problem, h2) == doctest::Approx(4.0 / 3.0 + std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("cost: matches dense oracle") {
  std::mt19937 rng(11);
  Matrix phi = testutil::random_unit_columns(rng, 3, 5);
  Matrix y = testutil::random_matrix(rng, 3, 2);
  MmvProblem problem(phi, y);
  Hyperparams h{testutil::random_gamma(rng, 5), testutil::random_spd(rng, 2), 0.3};
  double got = cost(problem, h);
  double want = oracle::cost(phi, y, h.gamma, h.b_mat, h.lambda);
  CHECK(std::abs(got - want) < 1e-10 * std::abs(want));
}

TEST_CASE("cost: broken hyperparameters are reported") {
  Matrix phi(2, 3), y(2, 2);
  phi.setOnes();
  y.setOnes();
  MmvProblem problem(phi, y);
  // gamma = 0 and lambda = 0 make Sigma_y identically zero.
  Hyperparams h{Vector::Zero(3), Matrix::Identity(2, 2), 0.0};
  CHECK_THROWS_AS(cost(problem, h), NumericalError);
}

TEST_CASE("cost: invariant under gamma/B rescaling") {
  std::mt19937 rng(13);
  Matrix phi = testutil::random_unit_columns(rng, 4, 7);
  Matrix y = testutil::random_matrix(rng, 4, 3);
  MmvProblem problem(phi, y);
  Vector gamma = testutil::random_gamma(rng, 7);
  Matrix b = testutil::random_spd(rng, 3);
  double base = cost(problem, {gamma, b, 0.2});
  for (double c : {0.5, 2.0, 17.0}) {
    double scaled = cost(problem, {Vector(c * gamma), Matrix(b / c), 0.2});
    CHECK(std::abs(scaled - base) < 1e-12 * std::abs(base));
  }
}

TEST_CASE("posterior moments: zero prior pins everything at zero") {
  std::mt19937 rng(17);
  Matrix phi = testutil::random_unit_columns(rng, 3, 6);
  Matrix y = testutil::random_matrix(rng, 3, 2);
  MmvProblem problem(phi, y);
  Hyperparams h{Vector::Zero(6), Matrix::Identity(2, 2), 0.5};
  auto pm = posterior_moments(problem, h);
  CHECK(pm.mu.cwiseAbs().maxCoeff() == 0.0);
  for (const auto& blk : pm.sigma_blocks) CHECK(blk.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("posterior moments: invertible noiseless system recovers Y") {
  std::mt19937 rng(19);
  Matrix phi = Matrix::Identity(2, 2);
  Matrix y = testutil::random_matrix(rng, 2, 2);
  MmvProblem problem(phi, y);
  Hyperparams h{Vector::Ones(2), Matrix::Identity(2, 2), 1e-12};
  auto pm = posterior_moments(problem, h);
  CHECK((pm.mean_matrix() - y).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("posterior moments: diagonal blocks match both dense forms") {
  std::mt19937 rng(23);
  Matrix phi = testutil::random_unit_columns(rng, 4, 8);
  Matrix y = testutil::random_matrix(rng, 4, 3);
  MmvProblem problem(phi, y);
  Hyperparams h{testutil::random_gamma(rng, 8), testutil::random_spd(rng, 3), 0.25};

  auto pm = posterior_moments(problem, h);
  Matrix f1 = oracle::sigma_x_form1(phi, h.gamma, h.b_mat, h.lambda);
  Matrix f2 = oracle::sigma_x_form2(phi, h.gamma, h.b_mat, h.lambda);
  CHECK((f1 - f2).cwiseAbs().maxCoeff() < 1e-9);
  for (Index i = 0; i < 8; ++i) {
    Matrix blk = f1.block(i * 3, i * 3, 3, 3);
    CHECK((pm.sigma_blocks[i] - blk).cwiseAbs().maxCoeff() < 1e-9);
  }
  Vector mu1 = oracle::mu_x_form1(phi, y, h.gamma, h.b_mat, h.lambda);
  CHECK((pm.mu - mu1).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("posterior moments: blocks are symmetric PSD") {
  std::mt19937 rng(29);
  Matrix phi = testutil::random_unit_columns(rng, 4, 8);
  Matrix y = testutil::random_matrix(rng, 4, 2);
  MmvProblem problem(phi, y);
  Hyperparams h{testutil::random_gamma(rng, 8, 0.0, 2.0), testutil::ar1_correlation(2, 0.8), 0.1};
  auto pm = posterior_moments(problem, h);
  for (const auto& blk : pm.sigma_blocks) {
    CHECK((blk - blk.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> es(blk, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
  }
}

TEST_CASE("map estimate: zero prior, dual forms, determined system") {
  std::mt19937 rng(31);

  Matrix phi = testutil::random_unit_columns(rng, 4, 8);
  Matrix y = testutil::random_matrix(rng, 4, 3);
  MmvProblem problem(phi, y);

  Hyperparams zero{Vector::Zero(8), Matrix::Identity(3, 3), 0.1};
  CHECK(map_estimate(problem, zero).cwiseAbs().maxCoeff() == 0.0);

  Hyperparams h{testutil::random_gamma(rng, 8), testutil::random_spd(rng, 3), 0.1};
  Matrix x_hat = map_estimate(problem, h);
  Vector f1 = oracle::map_form1(phi, y, h.gamma, h.b_mat, h.lambda);
  Vector f2 = oracle::map_form2(phi, y, h.gamma, h.b_mat, h.lambda);
  CHECK((f1 - f2).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((oracle::stack_rows(x_hat) - f2).cwiseAbs().maxCoeff() < 1e-10);

  // Square invertible dictionary, vanishing noise: the MAP estimate solves the system.
  Matrix phi_sq = testutil::random_matrix(rng, 3, 3) + 3.0 * Matrix::Identity(3, 3);
  Matrix y_sq = testutil::random_matrix(rng, 3, 2);
  MmvProblem det_problem(phi_sq, y_sq);
  Hyperparams hd{Vector::Ones(3), Matrix::Identity(2, 2), 1e-12};
  Matrix solved = map_estimate(det_problem, hd);
  CHECK((solved - phi_sq.inverse() * y_sq).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("dual-form identities on a batch of random instances") {
  std::mt19937 rng(37);
  std::uniform_int_distribution<int> npick(2, 6), lpick(1, 4);
  for (int rep = 0; rep < 10; ++rep) {
    Index n = npick(rng);
    Index m = std::min<Index>(2 * n, 12);
    Index l = lpick(rng);
    Matrix phi = testutil::random_unit_columns(rng, n, m);
    Matrix y = testutil::random_matrix(rng, n, l);
    Vector gamma = testutil::random_gamma(rng, m);
    Matrix b = testutil::random_spd(rng, l);
    double lambda = 0.1;

    Matrix s1 = oracle::sigma_x_form1(phi, gamma, b, lambda);
    Matrix s2 = oracle::sigma_x_form2(phi, gamma, b, lambda);
    CHECK((s1 - s2).cwiseAbs().maxCoeff() < 1e-10 * s1.cwiseAbs().maxCoeff());

    Vector m1 = oracle::map_form1(phi, y, gamma, b, lambda);
    Vector m2 = oracle::map_form2(phi, y, gamma, b, lambda);
    double scale = std::max(1.0, m1.cwiseAbs().maxCoeff());
    CHECK((m1 - m2).cwiseAbs().maxCoeff() < 1e-10 * scale);
  }
}

TEST_CASE("stacked residual equals matrix residual") {
  std::mt19937 rng(41);
  Matrix phi = testutil::random_unit_columns(rng, 3, 7);
  Matrix y = testutil::random_matrix(rng, 3, 4);
  Matrix x = testutil::random_matrix(rng, 7, 4);
  Matrix d = build_block_dictionary(phi, 4);
  double stacked = (oracle::stack_rows(y) - d * oracle::stack_rows(x)).norm();
  double matrixed = (y - phi * x).norm();
  CHECK(std::abs(stacked - matrixed) < 1e-12 * std::max(1.0, matrixed));
}

TEST_CASE("spd solves survive a grazing-singular matrix and reject indefinite ones") {
  // rank-1 PSD: the plain factorization fails, the one-shot diagonal jitter
  // rescues it
  Matrix singular(2, 2);
  singular << 1, 1, 1, 1;
  auto llt = spd_llt(singular, "test");
  Matrix reconstructed = llt.matrixL() * Matrix(llt.matrixL()).transpose();
  CHECK((reconstructed - singular).cwiseAbs().maxCoeff() < 1e-8);

  Matrix indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  CHECK_THROWS_AS(spd_llt(indefinite, "test"), NumericalError);

  // the same path makes the cost usable at a rank-deficient covariance
  Matrix phi(2, 2), y(2, 1);
  phi << 1, 1, 1, 1;  // rank one, lambda = 0: Sigma_y is singular PSD
  y << 1, 1;
  MmvProblem problem(phi, y);
  Hyperparams h{Vector::Ones(2), Matrix::Identity(1, 1), 0.0};
  CHECK(std::isfinite(cost(problem, h)));
}

TEST_CASE("problem invariants are enforced") {
  Matrix phi(2, 4), y(2, 2);
  phi.setRandom();
  y.setRandom();
  CHECK_NOTHROW(MmvProblem(phi, y));
  CHECK_THROWS_AS(MmvProblem(phi, Matrix(2, 0)), std::invalid_argument);   // L = 0
  CHECK_THROWS_AS(MmvProblem(Matrix::Ones(4, 2), Matrix::Ones(4, 1)), std::invalid_argument);
  CHECK_THROWS_AS(MmvProblem(phi, Matrix::Ones(3, 2)), std::invalid_argument);

  Truth t;
  t.x_gen = Matrix::Zero(4, 2);
  t.x_gen.row(1).setOnes();
  t.support = {1};
  CHECK_NOTHROW(MmvProblem(phi, y, t));
  t.support = {0};
  CHECK_THROWS_AS(MmvProblem(phi, y, t), std::invalid_argument);

  Matrix unit(2, 3);
  unit << 1, 0, 0.6, 0, 1, 0.8;
  CHECK(MmvProblem(unit, Matrix::Ones(2, 1)).unit_norm_columns());
  unit(0, 2) = 2.0;
  CHECK_FALSE(MmvProblem(unit, Matrix::Ones(2, 1)).unit_norm_columns());
}

TEST_CASE("hyperparameter validation") {
  Vector gamma = Vector::Ones(3);
  Matrix b = Matrix::Identity(2, 2);
  Hyperparams good{gamma, b, 0.1};
  CHECK_NOTHROW(good.validate(3, 2));

  Vector neg = gamma;
  neg[1] = -1e-3;
  Hyperparams h_neg{neg, b, 0.1};
  CHECK_THROWS_AS(h_neg.validate(3, 2), std::invalid_argument);

  Matrix asym = b;
  asym(0, 1) = 0.5;
  Hyperparams h_asym{gamma, asym, 0.1};
  CHECK_THROWS_AS(h_asym.validate(3, 2), std::invalid_argument);

  Matrix indef(2, 2);
  indef << 1, 2, 2, 1;
  Hyperparams h_indef{gamma, indef, 0.1};
  CHECK_THROWS_AS(h_indef.validate(3, 2), std::invalid_argument);

  CHECK_THROWS_AS(good.validate(4, 2), std::invalid_argument);
}
