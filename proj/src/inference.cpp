#include "carkit/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "carkit/errors.hpp"
#include "carkit/rng.hpp"
#include "carkit/stats.hpp"

namespace carkit {

namespace {
constexpr std::uint64_t kTagShuffle = stream_tag("perm.shuffle");
constexpr std::uint64_t kTagOrder = stream_tag("rerand.order");
constexpr std::uint64_t kTagAssign = stream_tag("rerand.assign");

// C(n, k) capped at cap+1; the partial products C(n-k+i, i) are nondecreasing
unsigned long long choose_capped(int n, int k, unsigned long long cap) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned long long c = 1;
  for (int i = 1; i <= k; ++i) {
    c = c * static_cast<unsigned long long>(n - k + i) / static_cast<unsigned long long>(i);
    if (c > cap) return cap + 1;
  }
  return c;
}
}  // namespace

TestStatistic wald_stat(const FitResult& fit, double margin, Eigen::Index coefficient_index) {
  if (!fit.converged) throw EstimationError("wald_stat: fit did not converge");
  const double se = fit.se[coefficient_index];
  if (!(se > 0.0)) throw EstimationError("wald_stat: nonpositive standard error");
  return {(fit.beta[coefficient_index] - margin) / se, margin, coefficient_index};
}

RefitEngine::RefitEngine(const Dataset& data, ModelSpec spec, ModelKind family, double tau)
    : data_(&data), family_(family), design_(build_design(data, spec, family)) {
  switch (family) {
    case ModelKind::ols:
    case ModelKind::firth_logistic:
      y_ = Eigen::Map<const Eigen::VectorXd>(data.y.data(), static_cast<Eigen::Index>(data.y.size()));
      break;
    case ModelKind::cox: break;
    case ModelKind::rmst:
      rmst_ = rmst_ipcw(data.time, data.event, tau, rmst_opts_.weight_floor);
      break;
  }
}

std::optional<double> RefitEngine::stat_for(const std::vector<Arm>& arms) {
  set_arm_column(design_, arms);
  try {
    FitResult fit;
    switch (family_) {
      case ModelKind::ols: fit = fit_ols(design_.x, y_); break;
      case ModelKind::firth_logistic: fit = fit_firth_logistic(design_.x, y_); break;
      case ModelKind::cox: fit = fit_cox(design_.x, data_->time, data_->event); break;
      case ModelKind::rmst: fit = fit_rmst_weighted(design_.x, rmst_, rmst_opts_); break;
    }
    if (!fit.converged) return std::nullopt;
    const double se = fit.se[design_.arm_col];
    if (!(se > 0.0) || !std::isfinite(fit.beta[design_.arm_col])) return std::nullopt;
    return effect_sign(family_) * fit.beta[design_.arm_col] / se;
  } catch (const EstimationError&) {
    return std::nullopt;
  } catch (const DesignError&) {
    return std::nullopt;
  }
}

namespace {

EmpiricalDistribution finish_distribution(std::vector<std::optional<double>> raw,
                                          ResampleMethod method, Scheme scheme, int b_requested,
                                          std::uint64_t seed, bool exhaustive,
                                          double max_drop_fraction) {
  EmpiricalDistribution d;
  d.method = method;
  d.scheme = scheme;
  d.b_requested = b_requested;
  d.seed = seed;
  d.exhaustive = exhaustive;
  for (const auto& s : raw) {
    if (s)
      d.stats.push_back(*s);
    else
      ++d.dropped;
  }
  if (d.dropped > max_drop_fraction * static_cast<double>(raw.size()))
    throw ResampleError("resampling aborted: " + std::to_string(d.dropped) + " of " +
                        std::to_string(raw.size()) +
                        " refits failed to converge (limit " +
                        std::to_string(static_cast<int>(100 * max_drop_fraction)) + "%)");
  std::sort(d.stats.begin(), d.stats.end());
  return d;
}

}  // namespace

EmpiricalDistribution empirical_null_permutation(const Dataset& data, ModelSpec spec,
                                                 ModelKind family, int b, std::uint64_t seed,
                                                 const ResampleOptions& opts) {
  if (b < 1) throw ConfigError("empirical_null_permutation: B must be positive");
  RefitEngine engine(data, spec, family, opts.tau);

  const int n = static_cast<int>(data.size());
  const int n1 = static_cast<int>(std::count(data.arms.begin(), data.arms.end(), Arm::treatment));

  std::vector<std::optional<double>> raw;
  const auto total = choose_capped(n, n1, static_cast<unsigned long long>(b));
  const bool exhaustive = total <= static_cast<unsigned long long>(b);
  // B >= 100 is required for Monte Carlo sampling; smaller B is fine when it
  // already covers every distinct assignment
  if (!exhaustive && b < 100)
    throw ConfigError("empirical_null_permutation: B must be at least 100 when sampling");

  if (exhaustive) {
    // enumerate every assignment of n1 treatment labels to n positions
    std::vector<int> pos(static_cast<std::size_t>(n1));
    std::iota(pos.begin(), pos.end(), 0);
    std::vector<Arm> arms(static_cast<std::size_t>(n));
    raw.reserve(static_cast<std::size_t>(total));
    while (true) {
      std::fill(arms.begin(), arms.end(), Arm::control);
      for (int k : pos) arms[static_cast<std::size_t>(k)] = Arm::treatment;
      raw.push_back(engine.stat_for(arms));
      int j = n1 - 1;
      while (j >= 0 && pos[static_cast<std::size_t>(j)] == n - n1 + j) --j;
      if (j < 0) break;
      ++pos[static_cast<std::size_t>(j)];
      for (int k = j + 1; k < n1; ++k)
        pos[static_cast<std::size_t>(k)] = pos[static_cast<std::size_t>(k - 1)] + 1;
    }
  } else {
    raw.resize(static_cast<std::size_t>(b));
    for (int i = 0; i < b; ++i) {
      std::vector<Arm> arms = data.arms;
      Rng rng(derive_seed(seed, kTagShuffle, static_cast<std::uint64_t>(i)));
      rng.shuffle(arms);
      raw[static_cast<std::size_t>(i)] = engine.stat_for(arms);
    }
  }
  return finish_distribution(std::move(raw), ResampleMethod::permutation, Scheme::complete, b,
                             seed, exhaustive, opts.max_drop_fraction);
}

EmpiricalDistribution empirical_null_rerandomization(const Dataset& data, ModelSpec spec,
                                                     ModelKind family, Scheme scheme, int b,
                                                     std::uint64_t seed,
                                                     const ResampleOptions& opts) {
  if (b < 100) throw ConfigError("empirical_null_rerandomization: B must be at least 100");
  RefitEngine engine(data, spec, family, opts.tau);

  const std::size_t n = data.size();
  std::vector<std::optional<double>> raw(static_cast<std::size_t>(b));
  for (int i = 0; i < b; ++i) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, kTagOrder, static_cast<std::uint64_t>(i)));
    rng.shuffle(order);

    std::vector<Subject> permuted(n);
    for (std::size_t k = 0; k < n; ++k) permuted[k] = data.subjects[order[k]];
    const std::vector<Arm> seq =
        randomize_sequence(scheme, permuted, derive_seed(seed, kTagAssign, static_cast<std::uint64_t>(i)),
                           opts.q, opts.block_size);

    std::vector<Arm> arms(n);
    for (std::size_t k = 0; k < n; ++k) arms[order[k]] = seq[k];
    raw[static_cast<std::size_t>(i)] = engine.stat_for(arms);
  }
  return finish_distribution(std::move(raw), ResampleMethod::rerandomization, scheme, b, seed,
                             false, opts.max_drop_fraction);
}

double quantile(const EmpiricalDistribution& dist, double upper_tail_mass) {
  if (!(upper_tail_mass > 0.0 && upper_tail_mass < 1.0))
    throw ConfigError("quantile: upper tail mass outside (0,1)");
  const int m = dist.size();
  if (m == 0) throw ConfigError("quantile: empty distribution");
  const double x = (1.0 - upper_tail_mass) * static_cast<double>(m);
  const double r = std::round(x);
  int idx = (std::abs(x - r) < 1e-8 * std::max(1.0, std::abs(x))) ? static_cast<int>(r)
                                                                  : static_cast<int>(std::ceil(x));
  idx = std::clamp(idx, 1, m);
  return dist.stats[static_cast<std::size_t>(idx - 1)];
}

AdjustedCI adjusted_ci(const FitResult& fit, Eigen::Index coefficient_index,
                       const EmpiricalDistribution& dist, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("adjusted_ci: alpha outside (0,1)");
  if (!fit.converged) throw EstimationError("adjusted_ci: fit did not converge");
  const double se = fit.se[coefficient_index];
  if (!(se > 0.0)) throw EstimationError("adjusted_ci: nonpositive standard error");
  const double beta = fit.beta[coefficient_index];
  const double q_hi = quantile(dist, alpha / 2.0);
  const double q_lo = quantile(dist, 1.0 - alpha / 2.0);
  return {beta - q_hi * se, beta - q_lo * se, alpha, dist.method};
}

Decision test_noninferiority(const FitResult& fit, Eigen::Index coefficient_index,
                             CriticalSource source, const EmpiricalDistribution* dist,
                             double margin_neg, double alpha) {
  const double t = wald_stat(fit, margin_neg, coefficient_index).value;
  const double c = source == CriticalSource::asymptotic
                       ? norm_quantile(1.0 - alpha)
                       : quantile(*dist, alpha);
  return t > c ? Decision::reject : Decision::fail;
}

Decision test_equivalence(const FitResult& fit, Eigen::Index coefficient_index,
                          CriticalSource source, const EmpiricalDistribution* dist,
                          double margin_l, double margin_u, double alpha) {
  const double t_low = wald_stat(fit, -margin_l, coefficient_index).value;
  const double t_high = wald_stat(fit, margin_u, coefficient_index).value;
  double c_hi, c_lo;
  if (source == CriticalSource::asymptotic) {
    c_hi = norm_quantile(1.0 - alpha);
    c_lo = -c_hi;
  } else {
    c_hi = quantile(*dist, alpha);
    c_lo = quantile(*dist, 1.0 - alpha);
  }
  return (t_low > c_hi && t_high < c_lo) ? Decision::reject : Decision::fail;
}

}  // namespace carkit
