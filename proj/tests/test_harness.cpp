#include <doctest.h>

#include <cmath>
#include <sstream>

#include "carkit/config.hpp"
#include "carkit/errors.hpp"
#include "carkit/harness.hpp"
#include "carkit/stats.hpp"
#include "helpers.hpp"

using namespace carkit;

namespace {

SimConfig small_normal_config() {
  SimConfig c;
  c.name = "unit";
  c.params.outcome_kind = OutcomeKind::normal;
  c.params.effect_a = -3.0;
  c.params.n_per_arm = 25;
  c.scheme = TrialScheme::car;
  c.models = {ModelSpec::naive, ModelSpec::model2};
  c.procedures = {Procedure::asymptotic, Procedure::permutation, Procedure::rerandomization};
  c.margins = {3.0, 3.0, 3.0};
  c.n_sims = 20;
  c.b_resamples = 120;
  c.master_seed = 321;
  return c;
}

}  // namespace

TEST_CASE("scenario report is byte-identical across reruns and worker counts") {
  const SimConfig c = small_normal_config();
  const std::string a = report_to_json(run_scenario(c, 1)).dump();
  const std::string b = report_to_json(run_scenario(c, 1)).dump();
  const std::string d = report_to_json(run_scenario(c, 3)).dump();
  const std::string e = report_to_json(run_scenario(c, 7)).dump();
  CHECK(a == b);
  CHECK(a == d);
  CHECK(a == e);
}

TEST_CASE("adding procedures never perturbs data generation or the plain test") {
  SimConfig all = small_normal_config();
  SimConfig only_t = all;
  only_t.procedures = {Procedure::asymptotic};

  const ScenarioReport ra = run_scenario(all, 2);
  const ScenarioReport rt = run_scenario(only_t, 2);
  for (std::size_t m = 0; m < ra.models.size(); ++m) {
    CHECK(ra.models[m].bias_mean == rt.models[m].bias_mean);
    CHECK(ra.models[m].n_bias == rt.models[m].n_bias);
    // the asymptotic cell is unchanged by running PT/RT alongside
    const auto& cell_a = ra.models[m].cells[0];
    const auto& cell_t = rt.models[m].cells[0];
    REQUIRE(cell_a.first == Procedure::asymptotic);
    CHECK(cell_a.second.rejection_rate_ni == cell_t.second.rejection_rate_ni);
    CHECK(cell_a.second.rejection_rate_eq == cell_t.second.rejection_rate_eq);
  }
}

TEST_CASE("replicate statistics are standard normal under the correct model") {
  SimConfig c;
  c.name = "qq";
  c.params.outcome_kind = OutcomeKind::normal;
  c.params.effect_a = 0.0;
  c.params.n_per_arm = 100;
  c.models = {ModelSpec::model2};
  c.procedures = {Procedure::asymptotic};
  c.n_sims = 300;
  c.master_seed = 4000;

  std::vector<double> stats;
  for (int r = 0; r < c.n_sims; ++r) {
    const ReplicateResult rr = run_replicate(c, r);
    REQUIRE(rr.models[0].fit_ok);
    stats.push_back(rr.models[0].stat0);
  }
  const double p = testutil::ks_test_cdf(stats, [](double x) { return norm_cdf(x); });
  CHECK(p > 0.01);
}

TEST_CASE("PT and RT consume the same dataset as T within a replicate") {
  const SimConfig c = small_normal_config();
  const Dataset d1 = make_replicate_dataset(c, 3);
  const Dataset d2 = make_replicate_dataset(c, 3);
  CHECK(d1.y == d2.y);
  CHECK(d1.arms == d2.arms);
  // different replicate index gives different data
  const Dataset d3 = make_replicate_dataset(c, 4);
  CHECK(d1.y != d3.y);
}

TEST_CASE("binary scenarios run end to end through the firth path") {
  SimConfig c;
  c.name = "binary_unit";
  c.params.outcome_kind = OutcomeKind::binary;
  c.params.effect_a = -1.0;
  c.params.n_per_arm = 30;
  c.models = {ModelSpec::naive, ModelSpec::model1};
  c.procedures = {Procedure::asymptotic, Procedure::permutation};
  c.margins = {1.0, 1.0, 1.0};
  c.n_sims = 6;
  c.b_resamples = 120;
  c.master_seed = 909;
  const ScenarioReport rep = run_scenario(c, 2);
  for (const auto& mr : rep.models) {
    CHECK(mr.n_bias + mr.fit_failures == 6);
    CHECK(mr.n_bias > 0);
  }
  // trace output covers every replicate x model row
  std::vector<ReplicateResult> trace;
  run_scenario(c, 2, {}, &trace);
  CHECK(trace.size() == 6);
  std::ostringstream csv;
  write_replicate_trace_csv(csv, c, trace);
  int lines = 0;
  std::string line;
  std::istringstream in(csv.str());
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 1 + 6 * 2);
}

TEST_CASE("cox effects are quoted on the time direction") {
  // A=-0.5 shortens treated survival; the reported effect must be negative,
  // in line with the normal/binary/RMST sign convention
  SimConfig c;
  c.name = "cox_sign";
  c.params.outcome_kind = OutcomeKind::tte;
  c.tte_analysis = TteAnalysis::cox;
  c.params.effect_a = -0.5;
  c.params.n_per_arm = 150;
  c.models = {ModelSpec::naive};
  c.procedures = {Procedure::asymptotic};
  c.margins = {0.5, 0.5, 0.5};
  c.n_sims = 1;
  c.master_seed = 2024;
  const ReplicateResult rr = run_replicate(c, 0);
  REQUIRE(rr.models[0].fit_ok);
  CHECK(rr.models[0].estimate < 0.0);
}

TEST_CASE("true coefficient resolution") {
  SimConfig c = small_normal_config();
  CHECK(resolve_true_coef(c) == -3.0);
  c.true_coef = -2.5;
  CHECK(resolve_true_coef(c) == -2.5);

  SimConfig r;
  r.params.outcome_kind = OutcomeKind::tte;
  r.tte_analysis = TteAnalysis::rmst;
  r.params.effect_a = 0.0;
  CHECK(resolve_true_coef(r) == 0.0);  // symmetric case needs no Monte Carlo
  r.true_coef = -0.29122;
  CHECK(resolve_true_coef(r) == -0.29122);
}

TEST_CASE("config validation rejects bad settings") {
  SimConfig c = small_normal_config();
  c.q = 0.4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_normal_config();
  c.block_size = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_normal_config();
  c.margins.ni = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_normal_config();
  c.params.outcome_kind = OutcomeKind::tte;
  c.params.tau = 120.0;
  c.params.cutoff = 100.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_normal_config();
  c.b_resamples = 50;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.procedures = {Procedure::asymptotic};
  CHECK_NOTHROW(c.validate());  // B is irrelevant without resampling
}

TEST_CASE("summarize handles empty and single-scenario inputs") {
  CHECK_NOTHROW(summarize({}));
  const std::string empty = summarize({});
  CHECK(empty.find("Bias") != std::string::npos);

  SimConfig c = small_normal_config();
  c.n_sims = 5;
  c.procedures = {Procedure::asymptotic};
  const ScenarioReport rep = run_scenario(c, 2);
  const std::string text = summarize({rep});
  CHECK(text.find("normal/naive") != std::string::npos);
  CHECK(text.find("normal/model2") != std::string::npos);
  CHECK(text.find("T_car") != std::string::npos);
}

TEST_CASE("report JSON carries the full cell structure") {
  SimConfig c = small_normal_config();
  c.n_sims = 5;
  const auto j = report_to_json(run_scenario(c, 2));
  CHECK(j["variable"] == "normal");
  CHECK(j["role"] == "type1");
  CHECK(j["models"].size() == 2);
  CHECK(j["models"][0]["cells"].size() == 3);
  CHECK(j["models"][0]["cells"][0].contains("rejection_rate_ni"));
  CHECK(j["config"]["master_seed"] == 321);
}

TEST_CASE("dataset sink sees every replicate exactly once") {
  SimConfig c = small_normal_config();
  c.n_sims = 8;
  c.procedures = {Procedure::asymptotic};
  std::vector<int> seen;
  run_scenario(c, 3, [&](int rep, const Dataset& d) {
    CHECK(d.size() == 50);
    seen.push_back(rep);
  });
  CHECK(seen.size() == 8);
  std::sort(seen.begin(), seen.end());
  for (int i = 0; i < 8; ++i) CHECK(seen[static_cast<std::size_t>(i)] == i);
}
