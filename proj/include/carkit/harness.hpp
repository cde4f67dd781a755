#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "carkit/alloc.hpp"
#include "carkit/dgm.hpp"
#include "carkit/inference.hpp"
#include "carkit/types.hpp"

namespace carkit {

enum class TrialScheme : int { car = 0, spbr = 1 };

enum class Procedure : int { asymptotic = 0, permutation = 1, rerandomization = 2 };

enum class TteAnalysis : int { cox = 0, rmst = 1 };

std::string to_string(TrialScheme s);
std::string to_string(Procedure p);
std::string to_string(TteAnalysis a);
std::string to_string(OutcomeKind k);
TrialScheme trial_scheme_from_string(const std::string& name);
Procedure procedure_from_string(const std::string& name);
OutcomeKind outcome_kind_from_string(const std::string& name);

struct Margins {
  double ni = 3.0;
  double eq_lower = 3.0;
  double eq_upper = 3.0;
};

struct SimConfig {
  std::string name = "scenario";
  ScenarioParams params;
  TteAnalysis tte_analysis = TteAnalysis::cox;
  TrialScheme scheme = TrialScheme::car;
  double q = 0.7;
  int block_size = 4;
  std::vector<ModelSpec> models = {ModelSpec::naive, ModelSpec::model1, ModelSpec::model2};
  std::vector<Procedure> procedures = {Procedure::asymptotic, Procedure::permutation,
                                       Procedure::rerandomization};
  Margins margins;
  int n_sims = 1000;
  int b_resamples = 1000;
  double alpha_one_sided = 0.025;
  double alpha_two_sided = 0.05;
  std::uint64_t master_seed = 1;
  std::optional<double> true_coef;       // override for the bias reference value
  long long pseudo_true_n = 1000000;     // sample size per arm for the RMST pseudo-true value

  void validate() const;  // throws ConfigError
};

// which fitter analyzes this scenario's outcomes
ModelKind analysis_family(OutcomeKind kind, TteAnalysis tte);

// row label in the report tables: normal / binomial / tte_cox / tte_rmst
std::string variable_label(const SimConfig& config);

// reference value the bias is measured against
double resolve_true_coef(const SimConfig& config);

// dataset for one replicate: covariates, allocation, outcomes
Dataset make_replicate_dataset(const SimConfig& config, int replicate_index);

struct ReplicateResult {
  struct ModelCells {
    bool fit_ok = false;
    double estimate = 0.0;  // treatment coefficient
    double se = 0.0;
    double stat0 = 0.0;     // Wald statistic at margin 0
    std::array<std::optional<Decision>, 3> ni;  // indexed by Procedure
    std::array<std::optional<Decision>, 3> eq;
    std::array<int, 3> resample_drops{};
    std::array<bool, 3> resample_aborted{};
  };
  std::vector<ModelCells> models;  // aligned with SimConfig::models
};

ReplicateResult run_replicate(const SimConfig& config, int replicate_index);

struct CellStats {
  int n_used_ni = 0;
  int n_used_eq = 0;
  double rejection_rate_ni = 0.0;
  double rejection_rate_eq = 0.0;
  double mc_stderr_ni = 0.0;  // sqrt(r(1-r)/n)
  double mc_stderr_eq = 0.0;
  int nonconvergence_count = 0;  // replicates with no decision for this cell
  long long resample_drops = 0;  // dropped refits summed over replicates
};

struct ModelReport {
  ModelSpec model = ModelSpec::naive;
  double bias_mean = 0.0;
  int n_bias = 0;
  int fit_failures = 0;
  std::vector<std::pair<Procedure, CellStats>> cells;
};

struct ScenarioReport {
  SimConfig config;
  double true_coef = 0.0;
  std::vector<ModelReport> models;
};

using DatasetSink = std::function<void(int, const Dataset&)>;

// Runs n_sims replicates (parallel over replicates; every number in the
// report depends only on the config and master seed, not the worker count).
// `replicate_trace`, when non-null, receives every ReplicateResult in
// replicate order.
ScenarioReport run_scenario(const SimConfig& config, int threads = 0,
                            const DatasetSink& dataset_sink = {},
                            std::vector<ReplicateResult>* replicate_trace = nullptr);

// per-replicate trace rows as CSV (one row per replicate x model)
void write_replicate_trace_csv(std::ostream& out, const SimConfig& config,
                               const std::vector<ReplicateResult>& results);

// Aligned-text bias / type-I / power tables across scenario reports.
std::string summarize(const std::vector<ScenarioReport>& reports);

}  // namespace carkit
