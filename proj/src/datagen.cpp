#include "tsbl/datagen.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "tsbl/linalg.hpp"

namespace tsbl::datagen {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr int kStabilityRejectionCap = 10000;

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  std::uint64_t state = a;
  std::uint64_t h = splitmix64(state);
  state ^= b + 0x9E3779B97F4A7C15ULL;
  h ^= splitmix64(state);
  state ^= c + 0xC2B2AE3D27D4EB4FULL;
  h ^= splitmix64(state);
  state ^= d + 0x165667B19E3779F9ULL;
  h ^= splitmix64(state);
  return h;
}

double RngStream::uniform() {
  // 53 random bits into [0, 1).
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double a, double b) { return a + (b - a) * uniform(); }

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(angle);
  has_spare_ = true;
  return r * std::cos(angle);
}

IndexSet RngStream::sample_without_replacement(Index n, Index k) {
  if (k < 0 || k > n) throw std::invalid_argument("sample_without_replacement: need 0 <= k <= n");
  std::vector<Index> pool(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  IndexSet picked;
  picked.reserve(static_cast<std::size_t>(k));
  for (Index j = 0; j < k; ++j) {
    const Index remaining = n - j;
    const Index offset = static_cast<Index>(std::min<double>(
        std::floor(uniform() * static_cast<double>(remaining)),
        static_cast<double>(remaining - 1)));
    std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(j + offset)]);
    picked.push_back(pool[static_cast<std::size_t>(j)]);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

SourceModel SourceModel::common_ar1(double beta, Rescale r) {
  SourceModel m;
  m.kind = Kind::CommonAr1;
  m.beta = beta;
  m.rescale = r;
  return m;
}

SourceModel SourceModel::ar(int p, std::vector<double> coeffs, Rescale r) {
  SourceModel m;
  m.kind = Kind::Ar;
  m.order = p;
  m.coeff_mode = CoeffMode::Fixed;
  m.fixed_coeffs = std::move(coeffs);
  m.rescale = r;
  return m;
}

SourceModel SourceModel::ar_sampled(int p, Rescale r) {
  SourceModel m;
  m.kind = Kind::Ar;
  m.order = p;
  m.coeff_mode = CoeffMode::SampleStable;
  m.rescale = r;
  return m;
}

SourceModel SourceModel::ma(int p, std::vector<double> coeffs, Rescale r) {
  SourceModel m;
  m.kind = Kind::Ma;
  m.order = p;
  m.coeff_mode = CoeffMode::Fixed;
  m.fixed_coeffs = std::move(coeffs);
  m.rescale = r;
  return m;
}

SourceModel SourceModel::ma_sampled(int p, Rescale r) {
  SourceModel m;
  m.kind = Kind::Ma;
  m.order = p;
  m.coeff_mode = CoeffMode::SampleUnitInterval;
  m.rescale = r;
  return m;
}

bool ar_coeffs_stable(const std::vector<double>& coeffs) {
  const Index p = static_cast<Index>(coeffs.size());
  if (p == 0) return true;
  Matrix companion = Matrix::Zero(p, p);
  for (Index j = 0; j < p; ++j) companion(0, j) = coeffs[static_cast<std::size_t>(j)];
  for (Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
  return companion.eigenvalues().cwiseAbs().maxCoeff() < 1.0 - 1e-12;
}

void SourceModel::validate() const {
  switch (kind) {
    case Kind::CommonAr1:
      if (!(std::abs(beta) < 1.0))
        throw std::invalid_argument("SourceModel: |beta| must be < 1");
      break;
    case Kind::Ar:
      if (order < 1) throw std::invalid_argument("SourceModel: AR order must be >= 1");
      if (coeff_mode == CoeffMode::Fixed) {
        if (static_cast<int>(fixed_coeffs.size()) != order)
          throw std::invalid_argument("SourceModel: AR coefficient count != order");
        if (!ar_coeffs_stable(fixed_coeffs))
          throw std::invalid_argument("SourceModel: AR coefficients are not stable");
      } else if (coeff_mode == CoeffMode::SampleUnitInterval) {
        throw std::invalid_argument("SourceModel: unit-interval sampling is an MA mode");
      }
      break;
    case Kind::Ma:
      if (order < 1) throw std::invalid_argument("SourceModel: MA order must be >= 1");
      if (coeff_mode == CoeffMode::Fixed &&
          static_cast<int>(fixed_coeffs.size()) != order)
        throw std::invalid_argument("SourceModel: MA coefficient count != order");
      if (coeff_mode == CoeffMode::SampleStable)
        throw std::invalid_argument("SourceModel: stability sampling is an AR mode");
      break;
  }
}

namespace {

// Stationary covariance of the AR companion state: solves S = A S A^T + Q
// with Q putting the unit innovation variance in the leading coordinate.
Matrix ar_stationary_covariance(const std::vector<double>& coeffs) {
  const Index p = static_cast<Index>(coeffs.size());
  Matrix a = Matrix::Zero(p, p);
  for (Index j = 0; j < p; ++j) a(0, j) = coeffs[static_cast<std::size_t>(j)];
  for (Index i = 1; i < p; ++i) a(i, i - 1) = 1.0;

  Matrix lhs = Matrix::Identity(p * p, p * p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j)
      for (Index r = 0; r < p; ++r)
        for (Index s = 0; s < p; ++s) lhs(i + j * p, r + s * p) -= a(i, r) * a(j, s);
  Vector q = Vector::Zero(p * p);
  q[0] = 1.0;
  Vector vec_s = lhs.partialPivLu().solve(q);
  Matrix s(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) s(i, j) = vec_s[i + j * p];
  return symmetrize(std::move(s));
}

std::vector<double> draw_ar_coeffs(RngStream& rng, int order) {
  // First-order processes follow the benchmark convention of strong positive
  // correlation; higher orders sample the cube and reject unstable sets.
  if (order == 1) return {rng.uniform(0.5, 1.0)};
  for (int attempt = 0; attempt < kStabilityRejectionCap; ++attempt) {
    std::vector<double> coeffs(static_cast<std::size_t>(order));
    for (auto& c : coeffs) c = rng.uniform(-1.0, 1.0);
    if (ar_coeffs_stable(coeffs)) return coeffs;
  }
  throw NumericalError("draw_ar_coeffs: stability rejection cap reached");
}

Vector simulate_ar_row(RngStream& rng, Index l, const std::vector<double>& coeffs) {
  const Index p = static_cast<Index>(coeffs.size());
  Matrix s = ar_stationary_covariance(coeffs);
  Eigen::LLT<Matrix> llt(s);
  Matrix chol;
  if (llt.info() == Eigen::Success) {
    chol = llt.matrixL();
  } else {
    // Near-unit roots can make S numerically semidefinite; fall back to an
    // eigenvalue square root.
    Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    chol = es.eigenvectors() *
           es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  Vector z(p);
  for (Index i = 0; i < p; ++i) z[i] = rng.normal();
  Vector state = chol * z;  // (x_0, x_-1, ..., x_{1-p})

  Vector row(l);
  for (Index t = 0; t < l; ++t) {
    double next = rng.normal();
    for (Index j = 0; j < p; ++j) next += coeffs[static_cast<std::size_t>(j)] * state[j];
    for (Index j = p - 1; j > 0; --j) state[j] = state[j - 1];
    state[0] = next;
    row[t] = next;
  }
  return row;
}

Vector simulate_ma_row(RngStream& rng, Index l, const std::vector<double>& coeffs) {
  const Index p = static_cast<Index>(coeffs.size());
  std::vector<double> history(static_cast<std::size_t>(p));
  for (auto& e : history) e = rng.normal();  // pre-samples make the start stationary
  Vector row(l);
  for (Index t = 0; t < l; ++t) {
    const double e_t = rng.normal();
    double value = e_t;
    for (Index j = 0; j < p; ++j)
      value += coeffs[static_cast<std::size_t>(j)] * history[static_cast<std::size_t>(j)];
    for (Index j = p - 1; j > 0; --j)
      history[static_cast<std::size_t>(j)] = history[static_cast<std::size_t>(j - 1)];
    if (p > 0) history[0] = e_t;
    row[t] = value;
  }
  return row;
}

}  // namespace

Matrix sample_dictionary(Index n, Index m, const DictionaryKind& kind, std::uint64_t seed) {
  if (n < 1 || m < n) throw std::invalid_argument("sample_dictionary: need 1 <= n <= m");
  RngStream rng(seed);

  if (kind.kind == DictionaryKind::Kind::UnitHypersphere) {
    Matrix phi(n, m);
    for (Index j = 0; j < m; ++j) {
      for (Index i = 0; i < n; ++i) phi(i, j) = rng.normal();
      const double norm = phi.col(j).norm();
      if (norm == 0.0) throw NumericalError("sample_dictionary: degenerate zero column");
      phi.col(j) /= norm;
    }
    return phi;
  }

  const Index order = kind.order;
  if (order < 1 || (order & (order - 1)) != 0)
    throw std::invalid_argument("sample_dictionary: Hadamard order must be a power of two");
  if (m != order)
    throw std::invalid_argument("sample_dictionary: Hadamard dictionaries need M = order");
  if (n > order)
    throw std::invalid_argument("sample_dictionary: cannot select more rows than the order");

  Matrix h = Matrix::Ones(1, 1);
  while (h.rows() < order) {
    Matrix next(h.rows() * 2, h.cols() * 2);
    next.topLeftCorner(h.rows(), h.cols()) = h;
    next.topRightCorner(h.rows(), h.cols()) = h;
    next.bottomLeftCorner(h.rows(), h.cols()) = h;
    next.bottomRightCorner(h.rows(), h.cols()) = -h;
    h = std::move(next);
  }

  IndexSet rows = rng.sample_without_replacement(order, n);
  Matrix phi(n, order);
  for (Index i = 0; i < n; ++i) phi.row(i) = h.row(rows[static_cast<std::size_t>(i)]);
  return phi;
}

std::pair<Matrix, IndexSet> gen_sources(Index m, Index l, Index k, const SourceModel& model,
                                        std::uint64_t seed) {
  model.validate();
  if (k < 1 || k > m) throw std::invalid_argument("gen_sources: need 1 <= k <= m");
  if (l < 1) throw std::invalid_argument("gen_sources: need L >= 1");

  // the support and the row processes use independent substreams of the
  // caller's seed
  RngStream support_rng(
      mix_seed(seed, static_cast<std::uint64_t>(StreamTag::Support), 0, 0));
  RngStream rng(mix_seed(seed, static_cast<std::uint64_t>(StreamTag::Sources), 0, 0));
  IndexSet support = support_rng.sample_without_replacement(m, k);

  Matrix x = Matrix::Zero(m, l);
  for (Index i : support) {
    Vector row;
    switch (model.kind) {
      case SourceModel::Kind::CommonAr1:
        row = simulate_ar_row(rng, l, {model.beta});
        break;
      case SourceModel::Kind::Ar: {
        std::vector<double> coeffs = model.coeff_mode == SourceModel::CoeffMode::Fixed
                                         ? model.fixed_coeffs
                                         : draw_ar_coeffs(rng, model.order);
        row = simulate_ar_row(rng, l, coeffs);
        break;
      }
      case SourceModel::Kind::Ma: {
        std::vector<double> coeffs = model.fixed_coeffs;
        if (model.coeff_mode == SourceModel::CoeffMode::SampleUnitInterval) {
          coeffs.resize(static_cast<std::size_t>(model.order));
          for (auto& c : coeffs) c = 1.0 - rng.uniform();  // (0, 1]
        }
        row = simulate_ma_row(rng, l, coeffs);
        break;
      }
    }

    const double norm = row.norm();
    if (norm == 0.0) throw NumericalError("gen_sources: degenerate zero row");
    const double target = model.rescale == SourceModel::Rescale::UnitNorm
                              ? 1.0
                              : rng.uniform(1.0 / 3.0, 1.0);
    x.row(i) = row.transpose() * (target / norm);
  }
  return {std::move(x), std::move(support)};
}

Matrix add_noise(const Matrix& clean, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0.0) return clean;
  const double clean_norm = clean.norm();
  if (clean_norm == 0.0)
    throw std::invalid_argument("add_noise: finite SNR requested for an all-zero signal");

  RngStream rng(seed);
  Matrix v(clean.rows(), clean.cols());
  for (Index j = 0; j < v.cols(); ++j)
    for (Index i = 0; i < v.rows(); ++i) v(i, j) = rng.normal();
  const double v_norm = v.norm();
  if (v_norm == 0.0) throw NumericalError("add_noise: degenerate zero noise draw");

  const double scale = clean_norm / (v_norm * std::pow(10.0, snr_db / 20.0));
  return clean + scale * v;
}

double sample_extreme_beta(double c) {
  if (c == 0.0) return 0.0;
  const double sign = c > 0.0 ? 1.0 : -1.0;
  return sign * (1.0 - std::pow(10.0, -std::abs(c)));
}

}  // namespace tsbl::datagen
