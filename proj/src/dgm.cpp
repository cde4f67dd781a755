#include "carkit/dgm.hpp"

#include <cmath>
#include <limits>

#include "carkit/design.hpp"
#include "carkit/errors.hpp"
#include "carkit/estimators.hpp"
#include "carkit/rng.hpp"

namespace carkit {

namespace {
constexpr std::uint64_t kTagCov = stream_tag("dgm.covariates");
constexpr std::uint64_t kTagNormal = stream_tag("dgm.normal");
constexpr std::uint64_t kTagBinary = stream_tag("dgm.binary");
constexpr std::uint64_t kTagTte = stream_tag("dgm.tte");
constexpr std::uint64_t kTagPseudo = stream_tag("dgm.pseudo_true");

void check_aligned(const std::vector<Subject>& subjects, const std::vector<Arm>& arms) {
  if (subjects.size() != arms.size())
    throw ConfigError("outcome generator: subjects and arms differ in length");
}
}  // namespace

std::vector<Subject> gen_covariates(int n, std::uint64_t seed) {
  std::vector<Subject> subjects(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, kTagCov, static_cast<std::uint64_t>(i)));
    Subject& s = subjects[static_cast<std::size_t>(i)];
    s.id = i + 1;
    s.site = static_cast<int>(rng.uniform_int(10)) + 1;
    s.baseline = rng.normal(30.0, 5.0);
    s.sex = rng.bernoulli(0.7) ? Sex::male : Sex::female;
  }
  return subjects;
}

std::vector<double> gen_normal_outcome(const std::vector<Subject>& subjects,
                                       const std::vector<Arm>& arms, double effect_a,
                                       std::uint64_t seed, double noise_sd) {
  check_aligned(subjects, arms);
  std::vector<double> y(subjects.size());
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    Rng rng(derive_seed(seed, kTagNormal, i));
    const Subject& s = subjects[i];
    y[i] = effect_a * arm_indicator(arms[i]) + 2.0 * (s.site_value() - 5.0) + s.baseline +
           5.0 * s.male_indicator() + noise_sd * rng.normal();
  }
  return y;
}

double binary_event_probability(const Subject& s, Arm arm, double effect_a) {
  const double eta = effect_a * arm_indicator(arm) + 0.2 * (s.site_value() - 5.0) +
                     0.05 * s.baseline + 0.05 * s.male_indicator();
  if (eta >= 0.0) {
    const double e = std::exp(-eta);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

std::vector<double> gen_binary_outcome(const std::vector<Subject>& subjects,
                                       const std::vector<Arm>& arms, double effect_a,
                                       std::uint64_t seed) {
  check_aligned(subjects, arms);
  std::vector<double> y(subjects.size());
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    Rng rng(derive_seed(seed, kTagBinary, i));
    y[i] = rng.bernoulli(binary_event_probability(subjects[i], arms[i], effect_a)) ? 1.0 : 0.0;
  }
  return y;
}

TteOutcome gen_tte_outcome(const std::vector<Subject>& subjects, const std::vector<Arm>& arms,
                           double effect_a, double censor_prob, double cutoff,
                           std::uint64_t seed) {
  check_aligned(subjects, arms);
  TteOutcome out;
  out.time.resize(subjects.size());
  out.event.resize(subjects.size());
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    Rng rng(derive_seed(seed, kTagTte, i));
    const Subject& s = subjects[i];
    const double eps = rng.normal();
    const double latent = std::exp(effect_a * arm_indicator(arms[i]) +
                                   0.2 * (s.site_value() - 5.0) + 0.1 * s.baseline +
                                   0.5 * s.male_indicator() + eps);
    double t = latent;
    int ev = 1;
    if (censor_prob > 0.0 && rng.bernoulli(censor_prob)) {
      t = rng.uniform() * latent;
      ev = 0;
    }
    if (t > cutoff) {
      t = cutoff;
      ev = 0;
    }
    out.time[i] = t;
    out.event[i] = ev;
  }
  return out;
}

double pseudo_true_rmst_coef(double effect_a, double tau, long long n_mc, std::uint64_t seed) {
  if (n_mc < 1) throw ConfigError("pseudo_true_rmst_coef: n_mc must be positive");
  const int n = static_cast<int>(2 * n_mc);

  Dataset data;
  data.outcome_kind = OutcomeKind::tte;
  data.subjects = gen_covariates(n, derive_seed(seed, kTagPseudo, 0));
  data.arms.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    data.arms[static_cast<std::size_t>(i)] = (i % 2 == 0) ? Arm::treatment : Arm::control;

  // estimand is censoring-free; generate latent times directly
  TteOutcome out = gen_tte_outcome(data.subjects, data.arms, effect_a, 0.0,
                                   std::numeric_limits<double>::infinity(),
                                   derive_seed(seed, kTagPseudo, 1));
  data.time = std::move(out.time);
  data.event = std::move(out.event);

  const DesignMatrix design = build_design(data, ModelSpec::naive, ModelKind::rmst);
  const FitResult fit = fit_rmst(design.x, data.time, data.event, tau);
  if (!fit.converged)
    throw EstimationError("pseudo_true_rmst_coef: RMST fit did not converge");
  return fit.beta[design.arm_col];
}

}  // namespace carkit
