#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "tsbl/types.hpp"

// Seeded synthetic data: dictionaries with unit-norm columns (or +/-1
// Hadamard rows), row-sparse source matrices whose nonzero rows follow AR/MA
// processes started from their stationary distribution, and Gaussian noise
// scaled to an exact SNR.
//
// Reproducibility contract: every generator is a pure function of its
// arguments. The engine is the standard 64-bit Mersenne twister and the
// uniform/normal transforms are implemented here rather than taken from
// <random>, so identical seeds give identical output across toolchains.
// Streams are derived from (master_seed, cell, trial, tag); the dictionary,
// support, sources and noise of one trial never share a stream, which keeps
// trial-level parallelism reproducible.

namespace tsbl::datagen {

enum class StreamTag : std::uint64_t { Dictionary = 1, Support = 2, Sources = 3, Noise = 4 };

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d);

inline std::uint64_t substream_seed(std::uint64_t master_seed, std::uint64_t cell,
                                    std::uint64_t trial, StreamTag tag) {
  return mix_seed(master_seed, cell, trial, static_cast<std::uint64_t>(tag));
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();                    // [0, 1)
  double uniform(double a, double b);  // [a, b)
  double normal();                     // standard Gaussian, Box-Muller

  // k distinct indices from {0, ..., n-1}, returned sorted.
  IndexSet sample_without_replacement(Index n, Index k);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct SourceModel {
  enum class Kind { CommonAr1, Ar, Ma };
  enum class CoeffMode { Fixed, SampleStable, SampleUnitInterval };
  enum class Rescale { NoiselessUniformThirdToOne, UnitNorm };

  Kind kind = Kind::CommonAr1;
  double beta = 0.0;                 // CommonAr1 coefficient, |beta| < 1
  int order = 1;                     // process order p for Ar/Ma
  CoeffMode coeff_mode = CoeffMode::Fixed;
  std::vector<double> fixed_coeffs;  // used when coeff_mode == Fixed
  Rescale rescale = Rescale::NoiselessUniformThirdToOne;

  static SourceModel common_ar1(double beta,
                                Rescale r = Rescale::NoiselessUniformThirdToOne);
  static SourceModel ar(int p, std::vector<double> coeffs,
                        Rescale r = Rescale::NoiselessUniformThirdToOne);
  static SourceModel ar_sampled(int p, Rescale r = Rescale::NoiselessUniformThirdToOne);
  static SourceModel ma(int p, std::vector<double> coeffs,
                        Rescale r = Rescale::NoiselessUniformThirdToOne);
  static SourceModel ma_sampled(int p, Rescale r = Rescale::NoiselessUniformThirdToOne);

  void validate() const;  // rejects unstable fixed AR coefficient sets
};

struct DictionaryKind {
  enum class Kind { UnitHypersphere, HadamardRows };
  Kind kind = Kind::UnitHypersphere;
  Index order = 0;  // Hadamard order, a power of two

  static DictionaryKind unit_hypersphere() { return {Kind::UnitHypersphere, 0}; }
  static DictionaryKind hadamard_rows(Index order) { return {Kind::HadamardRows, order}; }
};

// UnitHypersphere: independent standard-normal columns normalized to unit
// norm. HadamardRows: n rows of the order x order Sylvester Hadamard matrix,
// chosen uniformly without replacement; columns keep their +/-1 entries.
Matrix sample_dictionary(Index n, Index m, const DictionaryKind& kind, std::uint64_t seed);

// Row-sparse M x L source matrix: a uniformly drawn size-k support, each
// nonzero row simulated from the model with unit-variance innovations and a
// stationary start, then rescaled per model.rescale.
std::pair<Matrix, IndexSet> gen_sources(Index m, Index l, Index k, const SourceModel& model,
                                        std::uint64_t seed);

// clean + V with V white Gaussian scaled so that
// 20 log10(||clean||_F / ||V||_F) equals snr_db exactly. Infinite snr_db
// returns clean unchanged.
Matrix add_noise(const Matrix& clean, double snr_db, std::uint64_t seed);

// Correlation coefficient from the extreme-correlation index:
// sign(c) * (1 - 10^-|c|).
double sample_extreme_beta(double c);

// True when every root of the AR characteristic polynomial lies strictly
// inside the unit circle.
bool ar_coeffs_stable(const std::vector<double>& coeffs);

}  // namespace tsbl::datagen
