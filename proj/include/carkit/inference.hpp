#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "carkit/alloc.hpp"
#include "carkit/design.hpp"
#include "carkit/estimators.hpp"
#include "carkit/types.hpp"

namespace carkit {

struct TestStatistic {
  double value = 0.0;
  double margin = 0.0;  // signed margin delta applied, T = (beta1 - margin)/se1
  Eigen::Index coefficient_index = 0;
};

TestStatistic wald_stat(const FitResult& fit, double margin, Eigen::Index coefficient_index);

// The Cox partial likelihood estimates a log-hazard ratio, where a harmful
// treatment comes out positive. Trial effects are quoted on the log-time
// direction instead, so a harmful treatment has a negative coefficient for
// every outcome family and the NI/EQ margins share one sign convention.
inline double effect_sign(ModelKind family) {
  return family == ModelKind::cox ? -1.0 : 1.0;
}

enum class ResampleMethod : int { permutation = 0, rerandomization = 1 };

// Sorted resampled test statistics (margin 0) with provenance. Non-convergent
// refits are dropped from `stats` and counted in `dropped`.
struct EmpiricalDistribution {
  std::vector<double> stats;  // ascending
  ResampleMethod method = ResampleMethod::permutation;
  Scheme scheme = Scheme::complete;
  int b_requested = 0;
  int dropped = 0;
  std::uint64_t seed = 0;
  bool exhaustive = false;

  int size() const { return static_cast<int>(stats.size()); }
};

struct ResampleOptions {
  double tau = 80.0;               // restriction time for RMST refits
  double q = 0.7;                  // biased-coin probability for re-randomization
  int block_size = 4;              // SPBR block size for re-randomization
  double max_drop_fraction = 0.05; // abort when more refits fail
};

// Refits one analysis model under replaced arm labels; everything that does
// not depend on the labels (design columns, IPCW weights) is built once.
class RefitEngine {
public:
  RefitEngine(const Dataset& data, ModelSpec spec, ModelKind family, double tau = 80.0);

  // Wald statistic at margin 0 for the given labels; nullopt when the refit
  // fails or does not converge.
  std::optional<double> stat_for(const std::vector<Arm>& arms);

  const DesignMatrix& design() const { return design_; }

private:
  const Dataset* data_;
  ModelKind family_;
  DesignMatrix design_;
  Eigen::VectorXd y_;
  RmstData rmst_;
  RmstOptions rmst_opts_{};
};

// Empirical null by shuffling arm labels (group sizes preserved). When the
// number of distinct label assignments is <= B the full set is enumerated
// instead of sampled.
EmpiricalDistribution empirical_null_permutation(const Dataset& data, ModelSpec spec,
                                                 ModelKind family, int b, std::uint64_t seed,
                                                 const ResampleOptions& opts = {});

// Empirical null by re-running the allocation scheme on uniformly permuted
// enrollment orders.
EmpiricalDistribution empirical_null_rerandomization(const Dataset& data, ModelSpec spec,
                                                     ModelKind family, Scheme scheme, int b,
                                                     std::uint64_t seed,
                                                     const ResampleOptions& opts = {});

// Upper-tail empirical quantile: the ceil((1-upper_tail_mass)*m)-th ascending
// order statistic.
double quantile(const EmpiricalDistribution& dist, double upper_tail_mass);

struct AdjustedCI {
  double lower = 0.0;
  double upper = 0.0;
  double alpha = 0.05;  // two-sided level
  ResampleMethod method = ResampleMethod::permutation;
};

// Percentile-pivot interval [beta1 - q_{a/2} se, beta1 - q_{1-a/2} se] from the
// empirical-null quantiles.
AdjustedCI adjusted_ci(const FitResult& fit, Eigen::Index coefficient_index,
                       const EmpiricalDistribution& dist, double alpha);

enum class Decision : int { fail = 0, reject = 1 };

enum class CriticalSource : int { asymptotic = 0, dist = 1 };

// Reject when T(margin_neg) > c with c the asymptotic z_{1-alpha} or the
// empirical upper-alpha quantile. `dist` may be null for asymptotic.
Decision test_noninferiority(const FitResult& fit, Eigen::Index coefficient_index,
                             CriticalSource source, const EmpiricalDistribution* dist,
                             double margin_neg, double alpha);

// Two one-sided tests: reject when T(-margin_l) > c_hi and T(+margin_u) < c_lo.
Decision test_equivalence(const FitResult& fit, Eigen::Index coefficient_index,
                          CriticalSource source, const EmpiricalDistribution* dist,
                          double margin_l, double margin_u, double alpha);

}  // namespace carkit
