#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "carkit/types.hpp"

namespace carkit {

enum class Scheme : int { pocock_simon = 0, taves = 1, spbr = 2, complete = 3 };

Scheme scheme_from_string(const std::string& name);
std::string to_string(Scheme s);

inline constexpr int kNumFactors = 3;  // site, disease status, sex
inline constexpr int kNumSites = 10;
inline constexpr int kNumStrata = kNumSites * 3 * 2;

// level index of factor j for this subject
int factor_level(const Subject& s, int factor);
int factor_level_count(int factor);

// joint stratum index over (site, disease status, sex), 0..59
int stratum_index(const Subject& s);

// Running per-factor-level arm counts plus per-stratum permuted-block state.
// All randomness is keyed off (seed, purpose, counter), so the draw for the
// n-th subject never depends on what else was evaluated in between.
struct AllocationState {
  double q = 0.7;      // biased-coin probability, (0.5, 1]
  int block_size = 4;  // SPBR block size, even
  std::uint64_t seed = 0;
  int n_assigned = 0;

  // counts[factor][level] = {treatment count, control count}
  std::array<std::vector<std::array<int, 2>>, kNumFactors> counts;

  struct BlockState {
    std::vector<Arm> order;  // current block, permuted
    int pos = 0;
    int block_index = 0;
  };
  std::map<int, BlockState> blocks;

  AllocationState(double q_ = 0.7, int block_size_ = 4, std::uint64_t seed_ = 0);
};

// Marginal imbalance G = sum_j |N1' - N0'| at the subject's factor levels
// after hypothetically assigning `arm`.
int hypothetical_imbalance(const AllocationState& state, const Subject& subject, Arm arm);

// Record a realized assignment (updates counts; block state untouched).
void apply_assignment(AllocationState& state, const Subject& subject, Arm arm);

Arm assign_pocock_simon(AllocationState& state, const Subject& subject);
Arm assign_taves(AllocationState& state, const Subject& subject);
Arm assign_spbr(AllocationState& state, const Subject& subject);
Arm assign_complete(AllocationState& state, const Subject& subject);

Arm assign(Scheme scheme, AllocationState& state, const Subject& subject);

// Run a whole enrollment sequence from an empty state.
std::vector<Arm> randomize_sequence(Scheme scheme, const std::vector<Subject>& subjects,
                                    std::uint64_t seed, double q = 0.7, int block_size = 4);

}  // namespace carkit
