#include "carkit/alloc.hpp"

#include <cstdlib>
#include <stdexcept>

#include "carkit/errors.hpp"
#include "carkit/rng.hpp"

namespace carkit {

namespace {
constexpr std::uint64_t kTagCoin = stream_tag("alloc.coin");
constexpr std::uint64_t kTagBlock = stream_tag("alloc.block");
}  // namespace

Scheme scheme_from_string(const std::string& name) {
  if (name == "ps" || name == "pocock-simon") return Scheme::pocock_simon;
  if (name == "taves") return Scheme::taves;
  if (name == "spbr") return Scheme::spbr;
  if (name == "complete") return Scheme::complete;
  throw ConfigError("unknown randomization scheme: '" + name + "'");
}

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::pocock_simon: return "ps";
    case Scheme::taves: return "taves";
    case Scheme::spbr: return "spbr";
    case Scheme::complete: return "complete";
  }
  return "?";
}

int factor_level(const Subject& s, int factor) {
  switch (factor) {
    case 0:
      if (s.site < 1 || s.site > kNumSites)
        throw DesignError("site out of range 1..10: " + std::to_string(s.site));
      return s.site - 1;
    case 1: return static_cast<int>(s.disease_status());
    case 2: return static_cast<int>(s.sex);
    default: throw std::out_of_range("factor index");
  }
}

int factor_level_count(int factor) {
  switch (factor) {
    case 0: return kNumSites;
    case 1: return 3;
    case 2: return 2;
    default: throw std::out_of_range("factor index");
  }
}

int stratum_index(const Subject& s) {
  return (factor_level(s, 0) * 3 + factor_level(s, 1)) * 2 + factor_level(s, 2);
}

AllocationState::AllocationState(double q_, int block_size_, std::uint64_t seed_)
    : q(q_), block_size(block_size_), seed(seed_) {
  if (!(q > 0.5 && q <= 1.0)) throw ConfigError("biased-coin q must lie in (0.5, 1]");
  if (block_size <= 0 || block_size % 2 != 0)
    throw ConfigError("block size must be a positive even integer");
  for (int j = 0; j < kNumFactors; ++j)
    counts[j].assign(static_cast<std::size_t>(factor_level_count(j)), {0, 0});
}

int hypothetical_imbalance(const AllocationState& state, const Subject& subject, Arm arm) {
  int g = 0;
  for (int j = 0; j < kNumFactors; ++j) {
    const auto& c = state.counts[j][static_cast<std::size_t>(factor_level(subject, j))];
    const int n1 = c[0] + (arm == Arm::treatment ? 1 : 0);
    const int n0 = c[1] + (arm == Arm::control ? 1 : 0);
    g += std::abs(n1 - n0);
  }
  return g;
}

void apply_assignment(AllocationState& state, const Subject& subject, Arm arm) {
  for (int j = 0; j < kNumFactors; ++j) {
    auto& c = state.counts[j][static_cast<std::size_t>(factor_level(subject, j))];
    ++c[arm == Arm::treatment ? 0 : 1];
  }
  ++state.n_assigned;
}

namespace {

Arm assign_minimization(AllocationState& state, const Subject& subject, double q) {
  const int g1 = hypothetical_imbalance(state, subject, Arm::treatment);
  const int g0 = hypothetical_imbalance(state, subject, Arm::control);
  double p = 0.5;
  if (g1 < g0)
    p = q;
  else if (g1 > g0)
    p = 1.0 - q;
  const double u =
      unit_uniform_at(state.seed, kTagCoin, static_cast<std::uint64_t>(state.n_assigned));
  const Arm arm = u < p ? Arm::treatment : Arm::control;
  apply_assignment(state, subject, arm);
  return arm;
}

}  // namespace

Arm assign_pocock_simon(AllocationState& state, const Subject& subject) {
  return assign_minimization(state, subject, state.q);
}

Arm assign_taves(AllocationState& state, const Subject& subject) {
  return assign_minimization(state, subject, 1.0);
}

Arm assign_spbr(AllocationState& state, const Subject& subject) {
  const int stratum = stratum_index(subject);
  auto& block = state.blocks[stratum];
  if (block.pos == static_cast<int>(block.order.size())) {
    // open a fresh uniformly permuted 1:1 block for this stratum
    block.order.assign(static_cast<std::size_t>(state.block_size), Arm::control);
    for (int i = 0; i < state.block_size / 2; ++i) block.order[static_cast<std::size_t>(i)] = Arm::treatment;
    Rng rng(derive_seed(state.seed, kTagBlock, static_cast<std::uint64_t>(stratum),
                        static_cast<std::uint64_t>(block.block_index)));
    rng.shuffle(block.order);
    block.pos = 0;
    ++block.block_index;
  }
  const Arm arm = block.order[static_cast<std::size_t>(block.pos++)];
  apply_assignment(state, subject, arm);
  return arm;
}

Arm assign_complete(AllocationState& state, const Subject& subject) {
  const double u =
      unit_uniform_at(state.seed, kTagCoin, static_cast<std::uint64_t>(state.n_assigned));
  const Arm arm = u < 0.5 ? Arm::treatment : Arm::control;
  apply_assignment(state, subject, arm);
  return arm;
}

Arm assign(Scheme scheme, AllocationState& state, const Subject& subject) {
  switch (scheme) {
    case Scheme::pocock_simon: return assign_pocock_simon(state, subject);
    case Scheme::taves: return assign_taves(state, subject);
    case Scheme::spbr: return assign_spbr(state, subject);
    case Scheme::complete: return assign_complete(state, subject);
  }
  throw ConfigError("unknown scheme");
}

std::vector<Arm> randomize_sequence(Scheme scheme, const std::vector<Subject>& subjects,
                                    std::uint64_t seed, double q, int block_size) {
  AllocationState state(q, block_size, seed);
  std::vector<Arm> arms;
  arms.reserve(subjects.size());
  for (const auto& s : subjects) arms.push_back(assign(scheme, state, s));
  return arms;
}

}  // namespace carkit
