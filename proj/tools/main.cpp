#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "carkit/config.hpp"
#include "carkit/csv.hpp"
#include "carkit/dgm.hpp"
#include "carkit/errors.hpp"
#include "carkit/harness.hpp"
#include "carkit/inference.hpp"
#include "carkit/parallel.hpp"
#include "carkit/stats.hpp"

namespace {

using namespace carkit;

struct AnalyzeArgs {
  std::string data_path;
  std::string outcome = "normal";
  std::string model = "naive";
  std::string method = "asymptotic";
  std::string scheme = "ps";
  double q = 0.7;
  int block_size = 4;
  double margin_ni = 3.0;
  double margin_eq_lower = 0.0;  // defaults to margin_ni when unset
  double margin_eq_upper = 0.0;
  double alpha = 0.025;
  double ci_alpha = 0.05;
  int b = 1000;
  std::uint64_t seed = 1;
  double tau = 80.0;
  std::string dump_null;
};

std::pair<OutcomeKind, ModelKind> parse_outcome(const std::string& s) {
  if (s == "normal") return {OutcomeKind::normal, ModelKind::ols};
  if (s == "binary") return {OutcomeKind::binary, ModelKind::firth_logistic};
  if (s == "tte-cox") return {OutcomeKind::tte, ModelKind::cox};
  if (s == "tte-rmst") return {OutcomeKind::tte, ModelKind::rmst};
  throw ConfigError("unknown outcome: '" + s + "' (normal|binary|tte-cox|tte-rmst)");
}

FitResult fit_dataset(const Dataset& data, const DesignMatrix& design, ModelKind family,
                      double tau) {
  switch (family) {
    case ModelKind::ols: {
      const Eigen::Map<const Eigen::VectorXd> y(data.y.data(),
                                                static_cast<Eigen::Index>(data.y.size()));
      return fit_ols(design.x, y);
    }
    case ModelKind::firth_logistic: {
      const Eigen::Map<const Eigen::VectorXd> y(data.y.data(),
                                                static_cast<Eigen::Index>(data.y.size()));
      return fit_firth_logistic(design.x, y);
    }
    case ModelKind::cox: return fit_cox(design.x, data.time, data.event);
    case ModelKind::rmst: return fit_rmst(design.x, data.time, data.event, tau);
  }
  throw ConfigError("unknown model family");
}

EmpiricalDistribution build_null(const Dataset& data, ModelSpec model, ModelKind family,
                                 const AnalyzeArgs& a) {
  ResampleOptions opts;
  opts.tau = a.tau;
  opts.q = a.q;
  opts.block_size = a.block_size;
  if (a.method == "permutation")
    return empirical_null_permutation(data, model, family, a.b, a.seed, opts);
  return empirical_null_rerandomization(data, model, family, scheme_from_string(a.scheme), a.b,
                                        a.seed, opts);
}

void write_null_csv(const std::string& path, const EmpiricalDistribution& dist) {
  std::ofstream out(path);
  if (!out) throw CsvError("cannot open '" + path + "' for writing");
  out << "stat\n";
  for (double s : dist.stats) out << format_double(s) << '\n';
}

int cmd_analyze(const AnalyzeArgs& args_in) {
  AnalyzeArgs a = args_in;
  if (a.margin_eq_lower == 0.0) a.margin_eq_lower = a.margin_ni;
  if (a.margin_eq_upper == 0.0) a.margin_eq_upper = a.margin_ni;

  const auto [kind, family] = parse_outcome(a.outcome);
  const Dataset data = read_dataset_csv_file(a.data_path, kind);
  const ModelSpec model = model_spec_from_string(a.model);
  const DesignMatrix design = build_design(data, model, family);
  FitResult fit = fit_dataset(data, design, family, a.tau);
  if (!fit.converged) throw Error("model fit did not converge");
  fit.beta[design.arm_col] *= effect_sign(family);

  const double beta1 = fit.beta[design.arm_col];
  const double se1 = fit.se[design.arm_col];
  const TestStatistic t_ni = wald_stat(fit, -a.margin_ni, design.arm_col);

  std::cout << "model: " << to_string(model) << "\n";
  std::cout << "n: " << data.size() << "\n";
  std::cout << "beta1: " << format_double(beta1) << "\n";
  std::cout << "se: " << format_double(se1) << "\n";
  std::cout << "T(-margin_ni): " << format_double(t_ni.value) << "\n";

  Decision ni, eq;
  double lo, hi;
  if (a.method == "asymptotic") {
    ni = test_noninferiority(fit, design.arm_col, CriticalSource::asymptotic, nullptr,
                             -a.margin_ni, a.alpha);
    eq = test_equivalence(fit, design.arm_col, CriticalSource::asymptotic, nullptr,
                          a.margin_eq_lower, a.margin_eq_upper, a.alpha);
    const double z = norm_quantile(1.0 - a.ci_alpha / 2.0);
    lo = beta1 - z * se1;
    hi = beta1 + z * se1;
  } else {
    const EmpiricalDistribution dist = build_null(data, model, family, a);
    ni = test_noninferiority(fit, design.arm_col, CriticalSource::dist, &dist, -a.margin_ni,
                             a.alpha);
    eq = test_equivalence(fit, design.arm_col, CriticalSource::dist, &dist, a.margin_eq_lower,
                          a.margin_eq_upper, a.alpha);
    const AdjustedCI ci = adjusted_ci(fit, design.arm_col, dist, a.ci_alpha);
    lo = ci.lower;
    hi = ci.upper;
    std::cout << "resamples: " << dist.size() << " (dropped " << dist.dropped << ")\n";
    if (!a.dump_null.empty()) write_null_csv(a.dump_null, dist);
  }
  std::cout << "ci(" << format_double(100.0 * (1.0 - a.ci_alpha))
            << "%): [" << format_double(lo) << ", " << format_double(hi) << "]\n";
  std::cout << "noninferiority: " << (ni == Decision::reject ? "reject" : "fail") << "\n";
  std::cout << "equivalence: " << (eq == Decision::reject ? "reject" : "fail") << "\n";
  return 0;
}

int cmd_export_null(const AnalyzeArgs& a, const std::string& out_path) {
  const auto [kind, family] = parse_outcome(a.outcome);
  const Dataset data = read_dataset_csv_file(a.data_path, kind);
  const ModelSpec model = model_spec_from_string(a.model);
  if (a.method == "asymptotic")
    throw ConfigError("export-null needs --method permutation or rerandomization");
  const EmpiricalDistribution dist = build_null(data, model, family, a);
  write_null_csv(out_path, dist);
  std::cerr << "wrote " << dist.size() << " statistics to " << out_path << " (dropped "
            << dist.dropped << ")\n";
  return 0;
}

int cmd_randomize(const std::string& input, const std::string& output, const std::string& scheme,
                  double q, int block_size, std::uint64_t seed) {
  const std::vector<Subject> subjects = read_subjects_csv_file(input);
  const std::vector<Arm> arms =
      randomize_sequence(scheme_from_string(scheme), subjects, seed, q, block_size);
  if (output.empty()) {
    write_randomized_csv(std::cout, subjects, arms);
  } else {
    std::ofstream out(output);
    if (!out) throw CsvError("cannot open '" + output + "' for writing");
    write_randomized_csv(out, subjects, arms);
  }
  return 0;
}

int cmd_simulate(const std::string& config_path, int threads_flag, const std::string& out_json,
                 const std::string& out_tables, const std::string& dump_dir,
                 const std::string& trace_path) {
  SimulationPlan plan = load_simulation_plan(config_path);
  if (threads_flag > 0) plan.threads = threads_flag;
  if (!out_json.empty()) plan.output_json = out_json;
  if (!out_tables.empty()) plan.output_tables = out_tables;

  std::ofstream trace;
  if (!trace_path.empty()) {
    trace.open(trace_path);
    if (!trace) throw Error("cannot open '" + trace_path + "' for writing");
  }

  std::vector<ScenarioReport> reports;
  for (const SimConfig& config : plan.scenarios) {
    DatasetSink sink;
    if (!dump_dir.empty()) {
      std::filesystem::create_directories(dump_dir);
      const std::string base = dump_dir + "/" + config.name + "_rep";
      sink = [base](int rep, const Dataset& data) {
        write_dataset_csv_file(base + std::to_string(rep) + ".csv", data);
      };
    }
    std::cerr << "running scenario '" << config.name << "' (" << config.n_sims
              << " replicates)\n";
    std::vector<ReplicateResult> replicates;
    reports.push_back(run_scenario(config, plan.threads, sink,
                                   trace.is_open() ? &replicates : nullptr));
    if (trace.is_open()) write_replicate_trace_csv(trace, config, replicates);
  }

  const std::string tables = summarize(reports);
  std::cout << tables;
  if (!plan.output_tables.empty()) {
    std::ofstream out(plan.output_tables);
    if (!out) throw Error("cannot open '" + plan.output_tables + "' for writing");
    out << tables;
  }
  if (!plan.output_json.empty()) {
    std::ofstream out(plan.output_json);
    if (!out) throw Error("cannot open '" + plan.output_json + "' for writing");
    out << reports_to_json(reports).dump(2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"covariate-adaptive randomization and randomization-inference toolkit"};
  app.require_subcommand(1);

  // randomize
  auto* rand_cmd = app.add_subcommand("randomize", "assign arms to a subjects CSV");
  std::string rand_input, rand_output, rand_scheme = "ps";
  double rand_q = 0.7;
  int rand_block = 4;
  std::uint64_t rand_seed = 1;
  rand_cmd->add_option("--input,-i", rand_input, "subjects CSV (id,site,baseline,sex)")
      ->required();
  rand_cmd->add_option("--output,-o", rand_output, "output CSV (default stdout)");
  rand_cmd->add_option("--scheme", rand_scheme, "ps|taves|spbr|complete");
  rand_cmd->add_option("--q", rand_q, "biased-coin probability");
  rand_cmd->add_option("--block-size", rand_block, "SPBR block size");
  rand_cmd->add_option("--seed", rand_seed, "RNG seed");

  // analyze / export-null share flags
  AnalyzeArgs an;
  auto add_analyze_flags = [&](CLI::App* cmd, bool with_margins) {
    cmd->add_option("--data", an.data_path, "dataset CSV")->required();
    cmd->add_option("--outcome", an.outcome, "normal|binary|tte-cox|tte-rmst");
    cmd->add_option("--model", an.model, "naive|model1|model2");
    cmd->add_option("--method", an.method, "asymptotic|permutation|rerandomization");
    cmd->add_option("--scheme", an.scheme, "re-randomization scheme: ps|taves|spbr|complete");
    cmd->add_option("--q", an.q, "biased-coin probability");
    cmd->add_option("--block-size", an.block_size, "SPBR block size");
    cmd->add_option("--b", an.b, "number of resamples");
    cmd->add_option("--seed", an.seed, "RNG seed");
    cmd->add_option("--tau", an.tau, "RMST restriction time");
    if (with_margins) {
      cmd->add_option("--margin-ni", an.margin_ni, "non-inferiority margin (positive)");
      cmd->add_option("--margin-eq-lower", an.margin_eq_lower, "lower equivalence margin");
      cmd->add_option("--margin-eq-upper", an.margin_eq_upper, "upper equivalence margin");
      cmd->add_option("--alpha", an.alpha, "one-sided test level");
      cmd->add_option("--ci-alpha", an.ci_alpha, "two-sided CI level");
      cmd->add_option("--dump-null", an.dump_null, "write sorted null statistics CSV");
    }
  };
  auto* analyze_cmd = app.add_subcommand("analyze", "fit one dataset and test NI/EQ");
  add_analyze_flags(analyze_cmd, true);

  auto* export_cmd = app.add_subcommand("export-null", "write the sorted empirical null CSV");
  std::string export_out;
  add_analyze_flags(export_cmd, false);
  export_cmd->add_option("--out", export_out, "output CSV path")->required();

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "run a simulation study from a JSON config");
  std::string sim_config, sim_json, sim_tables, sim_dump, sim_trace;
  int sim_threads = 0;
  sim_cmd->add_option("--config", sim_config, "JSON config path")->required();
  sim_cmd->add_option("--threads", sim_threads, "worker threads (default CARKIT_THREADS)");
  sim_cmd->add_option("--out-json", sim_json, "report JSON path");
  sim_cmd->add_option("--out-tables", sim_tables, "tables text path");
  sim_cmd->add_option("--dump-data", sim_dump, "directory for per-replicate dataset CSVs");
  sim_cmd->add_option("--trace", sim_trace, "per-replicate estimates/decisions CSV");

  // pseudo-true
  auto* pt_cmd = app.add_subcommand("pseudo-true", "large-sample pseudo-true RMST coefficient");
  double pt_a = -0.5, pt_tau = 80.0;
  long long pt_n = 1000000;
  std::uint64_t pt_seed = 1;
  pt_cmd->add_option("--A,--effect", pt_a, "generating treatment effect A");
  pt_cmd->add_option("--tau", pt_tau, "restriction time");
  pt_cmd->add_option("--n", pt_n, "subjects per arm");
  pt_cmd->add_option("--seed", pt_seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (rand_cmd->parsed())
      return cmd_randomize(rand_input, rand_output, rand_scheme, rand_q, rand_block, rand_seed);
    if (analyze_cmd->parsed()) return cmd_analyze(an);
    if (export_cmd->parsed()) return cmd_export_null(an, export_out);
    if (sim_cmd->parsed())
      return cmd_simulate(sim_config, sim_threads, sim_json, sim_tables, sim_dump, sim_trace);
    if (pt_cmd->parsed()) {
      const double v = pseudo_true_rmst_coef(pt_a, pt_tau, pt_n, pt_seed);
      std::cout << carkit::format_double(v) << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const CsvError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
