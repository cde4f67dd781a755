#include "carkit/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>

#include "carkit/design.hpp"
#include "carkit/errors.hpp"
#include "carkit/parallel.hpp"
#include "carkit/rng.hpp"

namespace carkit {

namespace {
constexpr std::uint64_t kTagCov = stream_tag("harness.covariates");
constexpr std::uint64_t kTagAlloc = stream_tag("harness.alloc");
constexpr std::uint64_t kTagOutcome = stream_tag("harness.outcome");
constexpr std::uint64_t kTagPerm = stream_tag("harness.perm");
constexpr std::uint64_t kTagRerand = stream_tag("harness.rerand");
constexpr std::uint64_t kTagPseudo = stream_tag("harness.pseudo_true");

Scheme alloc_scheme(TrialScheme s) {
  return s == TrialScheme::car ? Scheme::pocock_simon : Scheme::spbr;
}
}  // namespace

std::string to_string(TrialScheme s) { return s == TrialScheme::car ? "car" : "spbr"; }

std::string to_string(Procedure p) {
  switch (p) {
    case Procedure::asymptotic: return "asymptotic";
    case Procedure::permutation: return "permutation";
    case Procedure::rerandomization: return "rerandomization";
  }
  return "?";
}

std::string to_string(TteAnalysis a) { return a == TteAnalysis::cox ? "cox" : "rmst"; }

std::string to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::normal: return "normal";
    case OutcomeKind::binary: return "binary";
    case OutcomeKind::tte: return "tte";
  }
  return "?";
}

TrialScheme trial_scheme_from_string(const std::string& name) {
  if (name == "car") return TrialScheme::car;
  if (name == "spbr") return TrialScheme::spbr;
  throw ConfigError("unknown trial scheme: '" + name + "' (expected car or spbr)");
}

Procedure procedure_from_string(const std::string& name) {
  if (name == "asymptotic") return Procedure::asymptotic;
  if (name == "permutation") return Procedure::permutation;
  if (name == "rerandomization") return Procedure::rerandomization;
  throw ConfigError("unknown procedure: '" + name + "'");
}

OutcomeKind outcome_kind_from_string(const std::string& name) {
  if (name == "normal") return OutcomeKind::normal;
  if (name == "binary") return OutcomeKind::binary;
  if (name == "tte") return OutcomeKind::tte;
  throw ConfigError("unknown outcome kind: '" + name + "'");
}

void SimConfig::validate() const {
  if (params.n_per_arm < 1) throw ConfigError(name + ": n_per_arm must be at least 1");
  if (n_sims < 1) throw ConfigError(name + ": n_sims must be at least 1");
  if (!(margins.ni > 0.0 && margins.eq_lower > 0.0 && margins.eq_upper > 0.0))
    throw ConfigError(name + ": margins must be positive");
  if (!(alpha_one_sided > 0.0 && alpha_one_sided < 1.0))
    throw ConfigError(name + ": alpha_one_sided outside (0,1)");
  if (!(alpha_two_sided > 0.0 && alpha_two_sided < 1.0))
    throw ConfigError(name + ": alpha_two_sided outside (0,1)");
  if (!(q > 0.5 && q <= 1.0)) throw ConfigError(name + ": q must lie in (0.5, 1]");
  if (block_size <= 0 || block_size % 2 != 0)
    throw ConfigError(name + ": block_size must be a positive even integer");
  if (!(params.censor_prob >= 0.0 && params.censor_prob < 1.0))
    throw ConfigError(name + ": censor_prob outside [0,1)");
  if (params.outcome_kind == OutcomeKind::tte && params.tau > params.cutoff)
    throw ConfigError(name + ": tau must not exceed the cutoff");
  if (models.empty()) throw ConfigError(name + ": no analysis models selected");
  if (procedures.empty()) throw ConfigError(name + ": no test procedures selected");
  const bool wants_b = std::any_of(procedures.begin(), procedures.end(), [](Procedure p) {
    return p != Procedure::asymptotic;
  });
  if (wants_b && b_resamples < 100)
    throw ConfigError(name + ": b_resamples must be at least 100");
}

ModelKind analysis_family(OutcomeKind kind, TteAnalysis tte) {
  switch (kind) {
    case OutcomeKind::normal: return ModelKind::ols;
    case OutcomeKind::binary: return ModelKind::firth_logistic;
    case OutcomeKind::tte:
      return tte == TteAnalysis::cox ? ModelKind::cox : ModelKind::rmst;
  }
  throw ConfigError("unknown outcome kind");
}

std::string variable_label(const SimConfig& config) {
  switch (config.params.outcome_kind) {
    case OutcomeKind::normal: return "normal";
    case OutcomeKind::binary: return "binomial";
    case OutcomeKind::tte:
      return config.tte_analysis == TteAnalysis::cox ? "tte_cox" : "tte_rmst";
  }
  return "?";
}

double resolve_true_coef(const SimConfig& config) {
  if (config.true_coef) return *config.true_coef;
  if (analysis_family(config.params.outcome_kind, config.tte_analysis) == ModelKind::rmst &&
      config.params.effect_a != 0.0) {
    return pseudo_true_rmst_coef(config.params.effect_a, config.params.tau,
                                 config.pseudo_true_n,
                                 derive_seed(config.master_seed, kTagPseudo));
  }
  return config.params.effect_a;
}

Dataset make_replicate_dataset(const SimConfig& config, int replicate_index) {
  const auto r = static_cast<std::uint64_t>(replicate_index);
  const int n = 2 * config.params.n_per_arm;

  Dataset data;
  data.outcome_kind = config.params.outcome_kind;
  data.subjects = gen_covariates(n, derive_seed(config.master_seed, kTagCov, r));
  data.arms = randomize_sequence(alloc_scheme(config.scheme), data.subjects,
                                 derive_seed(config.master_seed, kTagAlloc, r), config.q,
                                 config.block_size);

  const std::uint64_t seed_out = derive_seed(config.master_seed, kTagOutcome, r);
  switch (config.params.outcome_kind) {
    case OutcomeKind::normal:
      data.y = gen_normal_outcome(data.subjects, data.arms, config.params.effect_a, seed_out);
      break;
    case OutcomeKind::binary:
      data.y = gen_binary_outcome(data.subjects, data.arms, config.params.effect_a, seed_out);
      break;
    case OutcomeKind::tte: {
      TteOutcome out = gen_tte_outcome(data.subjects, data.arms, config.params.effect_a,
                                       config.params.censor_prob, config.params.cutoff, seed_out);
      data.time = std::move(out.time);
      data.event = std::move(out.event);
      break;
    }
  }
  return data;
}

ReplicateResult run_replicate(const SimConfig& config, int replicate_index) {
  const auto r = static_cast<std::uint64_t>(replicate_index);
  const Dataset data = make_replicate_dataset(config, replicate_index);
  const ModelKind family = analysis_family(config.params.outcome_kind, config.tte_analysis);

  ResampleOptions ropts;
  ropts.tau = config.params.tau;
  ropts.q = config.q;
  ropts.block_size = config.block_size;

  ReplicateResult result;
  result.models.resize(config.models.size());

  for (std::size_t m = 0; m < config.models.size(); ++m) {
    auto& cells = result.models[m];
    FitResult fit;
    Eigen::Index arm_col = 0;
    try {
      const DesignMatrix design = build_design(data, config.models[m], family);
      arm_col = design.arm_col;
      switch (family) {
        case ModelKind::ols: {
          const Eigen::Map<const Eigen::VectorXd> y(data.y.data(),
                                                    static_cast<Eigen::Index>(data.y.size()));
          fit = fit_ols(design.x, y);
          break;
        }
        case ModelKind::firth_logistic: {
          const Eigen::Map<const Eigen::VectorXd> y(data.y.data(),
                                                    static_cast<Eigen::Index>(data.y.size()));
          fit = fit_firth_logistic(design.x, y);
          break;
        }
        case ModelKind::cox: fit = fit_cox(design.x, data.time, data.event); break;
        case ModelKind::rmst: fit = fit_rmst(design.x, data.time, data.event, config.params.tau); break;
      }
    } catch (const Error&) {
      cells.fit_ok = false;
      continue;
    }
    if (!fit.converged || !(fit.se[arm_col] > 0.0)) {
      cells.fit_ok = false;
      continue;
    }

    fit.beta[arm_col] *= effect_sign(family);  // quote Cox effects on the time direction
    cells.fit_ok = true;
    cells.estimate = fit.beta[arm_col];
    cells.se = fit.se[arm_col];
    cells.stat0 = cells.estimate / cells.se;

    for (Procedure proc : config.procedures) {
      const auto pi = static_cast<std::size_t>(proc);
      const EmpiricalDistribution* dist_ptr = nullptr;
      EmpiricalDistribution dist;
      CriticalSource source = CriticalSource::asymptotic;
      if (proc != Procedure::asymptotic) {
        source = CriticalSource::dist;
        try {
          if (proc == Procedure::permutation) {
            dist = empirical_null_permutation(data, config.models[m], family, config.b_resamples,
                                              derive_seed(config.master_seed, kTagPerm, r), ropts);
          } else {
            dist = empirical_null_rerandomization(
                data, config.models[m], family, alloc_scheme(config.scheme), config.b_resamples,
                derive_seed(config.master_seed, kTagRerand, r), ropts);
          }
        } catch (const ResampleError&) {
          cells.resample_aborted[pi] = true;
          continue;
        }
        cells.resample_drops[pi] = dist.dropped;
        dist_ptr = &dist;
      }
      cells.ni[pi] = test_noninferiority(fit, arm_col, source, dist_ptr, -config.margins.ni,
                                         config.alpha_one_sided);
      cells.eq[pi] = test_equivalence(fit, arm_col, source, dist_ptr, config.margins.eq_lower,
                                      config.margins.eq_upper, config.alpha_one_sided);
    }
  }
  return result;
}

ScenarioReport run_scenario(const SimConfig& config, int threads, const DatasetSink& dataset_sink,
                            std::vector<ReplicateResult>* replicate_trace) {
  config.validate();

  ScenarioReport report;
  report.config = config;
  report.true_coef = resolve_true_coef(config);

  std::vector<ReplicateResult> results(static_cast<std::size_t>(config.n_sims));
  std::mutex sink_mutex;
  parallel_for(config.n_sims, threads, [&](int rep) {
    if (dataset_sink) {
      const Dataset data = make_replicate_dataset(config, rep);
      std::lock_guard<std::mutex> lock(sink_mutex);
      dataset_sink(rep, data);
    }
    results[static_cast<std::size_t>(rep)] = run_replicate(config, rep);
  });
  if (replicate_trace) *replicate_trace = results;

  // deterministic reduction in replicate order
  for (std::size_t m = 0; m < config.models.size(); ++m) {
    ModelReport mr;
    mr.model = config.models[m];
    double bias_sum = 0.0;
    for (const auto& rr : results) {
      const auto& cells = rr.models[m];
      if (cells.fit_ok) {
        bias_sum += cells.estimate - report.true_coef;
        ++mr.n_bias;
      } else {
        ++mr.fit_failures;
      }
    }
    mr.bias_mean = mr.n_bias > 0 ? bias_sum / mr.n_bias : 0.0;

    for (Procedure proc : config.procedures) {
      const auto pi = static_cast<std::size_t>(proc);
      CellStats cs;
      int ni_rejects = 0;
      int eq_rejects = 0;
      for (const auto& rr : results) {
        const auto& cells = rr.models[m];
        cs.resample_drops += cells.resample_drops[pi];
        if (cells.ni[pi]) {
          ++cs.n_used_ni;
          if (*cells.ni[pi] == Decision::reject) ++ni_rejects;
        }
        if (cells.eq[pi]) {
          ++cs.n_used_eq;
          if (*cells.eq[pi] == Decision::reject) ++eq_rejects;
        }
        if (!cells.ni[pi] || !cells.eq[pi]) ++cs.nonconvergence_count;
      }
      if (cs.n_used_ni > 0) {
        cs.rejection_rate_ni = static_cast<double>(ni_rejects) / cs.n_used_ni;
        cs.mc_stderr_ni =
            std::sqrt(cs.rejection_rate_ni * (1.0 - cs.rejection_rate_ni) / cs.n_used_ni);
      }
      if (cs.n_used_eq > 0) {
        cs.rejection_rate_eq = static_cast<double>(eq_rejects) / cs.n_used_eq;
        cs.mc_stderr_eq =
            std::sqrt(cs.rejection_rate_eq * (1.0 - cs.rejection_rate_eq) / cs.n_used_eq);
      }
      mr.cells.emplace_back(proc, cs);
    }
    report.models.push_back(std::move(mr));
  }
  return report;
}

void write_replicate_trace_csv(std::ostream& out, const SimConfig& config,
                               const std::vector<ReplicateResult>& results) {
  out << "scenario,replicate,model,fit_ok,estimate,se,stat0";
  for (Procedure p : config.procedures)
    out << ",ni_" << to_string(p) << ",eq_" << to_string(p);
  out << '\n';
  const auto decision_field = [](const std::optional<Decision>& d) {
    return !d ? std::string() : (*d == Decision::reject ? std::string("1") : std::string("0"));
  };
  for (std::size_t rep = 0; rep < results.size(); ++rep) {
    for (std::size_t m = 0; m < config.models.size(); ++m) {
      const auto& cells = results[rep].models[m];
      out << config.name << ',' << rep << ',' << to_string(config.models[m]) << ','
          << (cells.fit_ok ? 1 : 0);
      if (cells.fit_ok)
        out << ',' << cells.estimate << ',' << cells.se << ',' << cells.stat0;
      else
        out << ",,,";
      for (Procedure p : config.procedures) {
        const auto pi = static_cast<std::size_t>(p);
        out << ',' << decision_field(cells.ni[pi]) << ',' << decision_field(cells.eq[pi]);
      }
      out << '\n';
    }
  }
}

namespace {

std::string format_sig(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string procedure_column(Procedure p, TrialScheme s) {
  std::string head = p == Procedure::asymptotic ? "T" : (p == Procedure::permutation ? "PT" : "RT");
  return head + "_" + to_string(s);
}

void render_table(std::ostringstream& out, const std::string& title,
                  const std::vector<std::string>& columns,
                  const std::vector<std::pair<std::string, std::map<std::string, std::string>>>& rows) {
  out << title << "\n";
  std::size_t head_w = std::string("variable/model").size();
  for (const auto& r : rows) head_w = std::max(head_w, r.first.size());
  std::vector<std::size_t> widths;
  for (const auto& c : columns) {
    std::size_t w = c.size();
    for (const auto& r : rows) {
      auto it = r.second.find(c);
      if (it != r.second.end()) w = std::max(w, it->second.size());
    }
    widths.push_back(w);
  }
  auto pad = [](const std::string& s, std::size_t w) {
    return s + std::string(w > s.size() ? w - s.size() : 0, ' ');
  };
  out << pad("variable/model", head_w);
  for (std::size_t j = 0; j < columns.size(); ++j) out << "  " << pad(columns[j], widths[j]);
  out << "\n";
  for (const auto& r : rows) {
    out << pad(r.first, head_w);
    for (std::size_t j = 0; j < columns.size(); ++j) {
      auto it = r.second.find(columns[j]);
      out << "  " << pad(it != r.second.end() ? it->second : "-", widths[j]);
    }
    out << "\n";
  }
  out << "\n";
}

}  // namespace

std::string summarize(const std::vector<ScenarioReport>& reports) {
  // row order: variables and models by first appearance
  std::vector<std::string> row_keys;
  auto row_key = [](const std::string& var, ModelSpec m) { return var + "/" + to_string(m); };

  std::vector<std::string> bias_cols, rate_cols;
  std::map<std::string, std::map<std::string, std::string>> bias_cells, type1_cells, power_cells;

  auto add_col = [](std::vector<std::string>& cols, const std::string& c) {
    if (std::find(cols.begin(), cols.end(), c) == cols.end()) cols.push_back(c);
  };

  for (const auto& rep : reports) {
    const std::string var = variable_label(rep.config);
    const bool presence = rep.config.params.effect_a != 0.0;
    const std::string bias_col =
        std::string(presence ? "presence." : "absence.") + "B_" + to_string(rep.config.scheme);
    add_col(bias_cols, bias_col);
    for (const auto& mr : rep.models) {
      const std::string key = row_key(var, mr.model);
      if (std::find(row_keys.begin(), row_keys.end(), key) == row_keys.end())
        row_keys.push_back(key);
      bias_cells[key][bias_col] = format_sig(mr.bias_mean);
      for (const auto& [proc, cs] : mr.cells) {
        const std::string col = procedure_column(proc, rep.config.scheme);
        add_col(rate_cols, col);
        auto& target = presence ? type1_cells : power_cells;
        target[key][col] = format_sig(100.0 * cs.rejection_rate_ni) + "/" +
                           format_sig(100.0 * cs.rejection_rate_eq);
      }
    }
  }

  // fixed column order for rates: T, PT, RT within car then spbr
  std::vector<std::string> rate_order;
  for (TrialScheme s : {TrialScheme::car, TrialScheme::spbr})
    for (Procedure p : {Procedure::asymptotic, Procedure::permutation, Procedure::rerandomization}) {
      const std::string c = procedure_column(p, s);
      if (std::find(rate_cols.begin(), rate_cols.end(), c) != rate_cols.end())
        rate_order.push_back(c);
    }

  auto rows_for = [&](const std::map<std::string, std::map<std::string, std::string>>& cells) {
    std::vector<std::pair<std::string, std::map<std::string, std::string>>> rows;
    for (const auto& key : row_keys) {
      auto it = cells.find(key);
      if (it != cells.end()) rows.emplace_back(key, it->second);
    }
    return rows;
  };

  std::ostringstream out;
  render_table(out, "Bias (mean estimate - true value)", bias_cols, rows_for(bias_cells));
  render_table(out, "Type-I error rate (%), NI/EQ", rate_order, rows_for(type1_cells));
  render_table(out, "Power (%), NI/EQ", rate_order, rows_for(power_cells));
  return out.str();
}

}  // namespace carkit
