#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "tsbl/types.hpp"

// Flat text container for MMV problem instances, version 1:
//
//   tsbl-problem 1
//   N M L K snr_db seed has_truth
//   N rows of M dictionary entries
//   N rows of L measurement entries
//   [K support indices]                (truth only)
//   [M rows of L source entries]       (truth only)
//
// All reals use round-trip precision, snr_db writes "inf" for noiseless
// instances, and the seed is carried as provenance metadata.

namespace tsbl::io {

void save_problem(std::ostream& out, const MmvProblem& problem, std::uint64_t seed);
void save_problem(const std::string& path, const MmvProblem& problem, std::uint64_t seed);

struct LoadedProblem {
  MmvProblem problem;
  std::uint64_t seed = 0;
};

LoadedProblem load_problem(std::istream& in);
LoadedProblem load_problem(const std::string& path);

}  // namespace tsbl::io
