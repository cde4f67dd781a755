#pragma once

#include <cstdint>
#include <vector>

#include "carkit/types.hpp"

namespace carkit {

struct ScenarioParams {
  OutcomeKind outcome_kind = OutcomeKind::normal;
  double effect_a = 0.0;     // treatment coefficient A in the generating model
  int n_per_arm = 100;
  double censor_prob = 0.1;  // completely-random censoring probability (TTE)
  double cutoff = 100.0;     // administrative censoring time (TTE)
  double tau = 80.0;         // RMST restriction time
};

// site ~ Uniform{1..10}, baseline ~ N(30, 5^2), male with probability 0.7;
// every subject draws from its own derived stream.
std::vector<Subject> gen_covariates(int n, std::uint64_t seed);

// Y = A x1 + 2 (x2 - 5) + x3 + 5 x4 + eps, eps ~ N(0, noise_sd^2).
// noise_sd = 0 is the deterministic test hook.
std::vector<double> gen_normal_outcome(const std::vector<Subject>& subjects,
                                       const std::vector<Arm>& arms, double effect_a,
                                       std::uint64_t seed, double noise_sd = 5.0);

// logit p = A x1 + 0.2 (x2 - 5) + 0.05 x3 + 0.05 x4, Y ~ Bernoulli(p)
std::vector<double> gen_binary_outcome(const std::vector<Subject>& subjects,
                                       const std::vector<Arm>& arms, double effect_a,
                                       std::uint64_t seed);

double binary_event_probability(const Subject& subject, Arm arm, double effect_a);

struct TteOutcome {
  std::vector<double> time;
  std::vector<int> event;
};

// Latent T = exp(A x1 + 0.2 (x2 - 5) + 0.1 x3 + 0.5 x4 + eps), eps ~ N(0,1).
// With probability censor_prob the subject is censored at C ~ Uniform(0, T);
// administrative censoring at `cutoff` is applied afterwards.
TteOutcome gen_tte_outcome(const std::vector<Subject>& subjects, const std::vector<Arm>& arms,
                           double effect_a, double censor_prob, double cutoff,
                           std::uint64_t seed);

// Large-sample pseudo-true RMST coefficient: fits the naive log-link RMST
// model to n_mc uncensored subjects per arm generated with effect A.
double pseudo_true_rmst_coef(double effect_a, double tau, long long n_mc, std::uint64_t seed);

}  // namespace carkit
