#include "tsbl/problem_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace tsbl::io {

namespace {

constexpr const char* kMagic = "tsbl-problem";
constexpr int kVersion = 1;

void write_real(std::ostream& out, double v) {
  if (std::isinf(v)) {
    out << (v > 0 ? "inf" : "-inf");
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

void write_matrix(std::ostream& out, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      write_real(out, m(i, j));
    }
    out << '\n';
  }
}

double read_real(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw std::runtime_error("problem file: unexpected end of input");
  if (tok == "inf") return std::numeric_limits<double>::infinity();
  if (tok == "-inf") return -std::numeric_limits<double>::infinity();
  return std::stod(tok);
}

Matrix read_matrix(std::istream& in, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = read_real(in);
  return m;
}

}  // namespace

void save_problem(std::ostream& out, const MmvProblem& problem, std::uint64_t seed) {
  const bool has_truth = problem.has_truth();
  const Index k = has_truth ? static_cast<Index>(problem.truth().support.size()) : 0;
  const double snr = has_truth ? problem.truth().snr_db
                               : std::numeric_limits<double>::infinity();
  out << kMagic << ' ' << kVersion << '\n';
  out << problem.n() << ' ' << problem.m() << ' ' << problem.l() << ' ' << k << ' ';
  write_real(out, snr);
  out << ' ' << seed << ' ' << (has_truth ? 1 : 0) << '\n';
  write_matrix(out, problem.phi());
  write_matrix(out, problem.y());
  if (has_truth) {
    const Truth& t = problem.truth();
    for (std::size_t i = 0; i < t.support.size(); ++i) {
      if (i) out << ' ';
      out << t.support[i];
    }
    out << '\n';
    write_matrix(out, t.x_gen);
  }
}

void save_problem(const std::string& path, const MmvProblem& problem, std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_problem: cannot open " + path);
  save_problem(out, problem, seed);
  if (!out) throw std::runtime_error("save_problem: write failed for " + path);
}

LoadedProblem load_problem(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic)
    throw std::runtime_error("problem file: bad magic header");
  if (version != kVersion)
    throw std::runtime_error("problem file: unsupported version");

  Index n, m, l, k;
  std::uint64_t seed;
  int has_truth;
  if (!(in >> n >> m >> l >> k)) throw std::runtime_error("problem file: bad dimensions");
  const double snr = read_real(in);
  if (!(in >> seed >> has_truth)) throw std::runtime_error("problem file: bad header tail");

  Matrix phi = read_matrix(in, n, m);
  Matrix y = read_matrix(in, n, l);
  std::optional<Truth> truth;
  if (has_truth) {
    Truth t;
    t.snr_db = snr;
    t.support.resize(static_cast<std::size_t>(k));
    for (auto& idx : t.support)
      if (!(in >> idx)) throw std::runtime_error("problem file: bad support");
    t.x_gen = read_matrix(in, m, l);
    truth = std::move(t);
  }
  return {MmvProblem(std::move(phi), std::move(y), std::move(truth)), seed};
}

LoadedProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_problem: cannot open " + path);
  return load_problem(in);
}

}  // namespace tsbl::io
