#include "carkit/config.hpp"

#include <fstream>
#include <set>

#include "carkit/errors.hpp"

namespace carkit {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      throw ConfigError(where + ": unknown key '" + item.key() + "'");
}

template <class T>
T get_as(const json& obj, const std::string& key, const T& fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": key '" + key + "': " + e.what());
  }
}

SimConfig parse_scenario(const json& obj, std::size_t index) {
  const std::string where = "scenarios[" + std::to_string(index) + "]";
  check_keys(obj, {"name", "outcome_kind", "tte_analysis", "effect_a", "n_per_arm",
                   "censor_prob", "cutoff", "tau", "scheme", "q", "block_size", "models",
                   "procedures", "margins", "n_sims", "b_resamples", "alpha_one_sided",
                   "alpha_two_sided", "master_seed", "true_coef", "pseudo_true_n"},
             where);

  SimConfig c;
  c.name = get_as<std::string>(obj, "name", "scenario" + std::to_string(index), where);
  c.params.outcome_kind =
      outcome_kind_from_string(get_as<std::string>(obj, "outcome_kind", "normal", where));
  const std::string tte = get_as<std::string>(obj, "tte_analysis", "cox", where);
  if (tte != "cox" && tte != "rmst")
    throw ConfigError(where + ": tte_analysis must be 'cox' or 'rmst'");
  c.tte_analysis = tte == "cox" ? TteAnalysis::cox : TteAnalysis::rmst;
  c.params.effect_a = get_as<double>(obj, "effect_a", 0.0, where);
  c.params.n_per_arm = get_as<int>(obj, "n_per_arm", 100, where);
  c.params.censor_prob = get_as<double>(obj, "censor_prob", 0.1, where);
  c.params.cutoff = get_as<double>(obj, "cutoff", 100.0, where);
  c.params.tau = get_as<double>(obj, "tau", 80.0, where);
  c.scheme = trial_scheme_from_string(get_as<std::string>(obj, "scheme", "car", where));
  c.q = get_as<double>(obj, "q", 0.7, where);
  c.block_size = get_as<int>(obj, "block_size", 4, where);

  if (obj.contains("models")) {
    c.models.clear();
    for (const auto& m : get_as<std::vector<std::string>>(obj, "models", {}, where))
      c.models.push_back(model_spec_from_string(m));
  }
  if (obj.contains("procedures")) {
    c.procedures.clear();
    for (const auto& p : get_as<std::vector<std::string>>(obj, "procedures", {}, where))
      c.procedures.push_back(procedure_from_string(p));
  }
  if (obj.contains("margins")) {
    const json& m = obj.at("margins");
    check_keys(m, {"ni", "eq_lower", "eq_upper"}, where + ".margins");
    c.margins.ni = get_as<double>(m, "ni", c.margins.ni, where + ".margins");
    c.margins.eq_lower = get_as<double>(m, "eq_lower", c.margins.eq_lower, where + ".margins");
    c.margins.eq_upper = get_as<double>(m, "eq_upper", c.margins.eq_upper, where + ".margins");
  }
  c.n_sims = get_as<int>(obj, "n_sims", 1000, where);
  c.b_resamples = get_as<int>(obj, "b_resamples", 1000, where);
  c.alpha_one_sided = get_as<double>(obj, "alpha_one_sided", 0.025, where);
  c.alpha_two_sided = get_as<double>(obj, "alpha_two_sided", 0.05, where);
  c.master_seed = get_as<std::uint64_t>(obj, "master_seed", 1, where);
  if (obj.contains("true_coef")) c.true_coef = get_as<double>(obj, "true_coef", 0.0, where);
  c.pseudo_true_n = get_as<long long>(obj, "pseudo_true_n", 1000000, where);

  c.validate();
  return c;
}

}  // namespace

SimulationPlan parse_simulation_plan(const nlohmann::json& doc) {
  check_keys(doc, {"scenarios", "threads", "output_json", "output_tables"}, "config");
  if (!doc.contains("scenarios") || !doc.at("scenarios").is_array() ||
      doc.at("scenarios").empty())
    throw ConfigError("config: 'scenarios' must be a non-empty array");

  SimulationPlan plan;
  plan.threads = get_as<int>(doc, "threads", 0, "config");
  plan.output_json = get_as<std::string>(doc, "output_json", "", "config");
  plan.output_tables = get_as<std::string>(doc, "output_tables", "", "config");
  std::size_t index = 0;
  for (const auto& s : doc.at("scenarios")) plan.scenarios.push_back(parse_scenario(s, index++));
  return plan;
}

SimulationPlan load_simulation_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    // nlohmann reports "parse error at line L, column C: ..."
    throw ConfigError(path + ": " + e.what());
  }
  return parse_simulation_plan(doc);
}

nlohmann::ordered_json config_to_json(const SimConfig& c) {
  ordered_json j;
  j["name"] = c.name;
  j["outcome_kind"] = to_string(c.params.outcome_kind);
  if (c.params.outcome_kind == OutcomeKind::tte) j["tte_analysis"] = to_string(c.tte_analysis);
  j["effect_a"] = c.params.effect_a;
  j["n_per_arm"] = c.params.n_per_arm;
  if (c.params.outcome_kind == OutcomeKind::tte) {
    j["censor_prob"] = c.params.censor_prob;
    j["cutoff"] = c.params.cutoff;
    j["tau"] = c.params.tau;
  }
  j["scheme"] = to_string(c.scheme);
  j["q"] = c.q;
  j["block_size"] = c.block_size;
  {
    ordered_json arr = ordered_json::array();
    for (ModelSpec m : c.models) arr.push_back(to_string(m));
    j["models"] = arr;
  }
  {
    ordered_json arr = ordered_json::array();
    for (Procedure p : c.procedures) arr.push_back(to_string(p));
    j["procedures"] = arr;
  }
  j["margins"] = {{"ni", c.margins.ni}, {"eq_lower", c.margins.eq_lower},
                  {"eq_upper", c.margins.eq_upper}};
  j["n_sims"] = c.n_sims;
  j["b_resamples"] = c.b_resamples;
  j["alpha_one_sided"] = c.alpha_one_sided;
  j["alpha_two_sided"] = c.alpha_two_sided;
  j["master_seed"] = c.master_seed;
  if (c.true_coef) j["true_coef"] = *c.true_coef;
  return j;
}

nlohmann::ordered_json report_to_json(const ScenarioReport& report) {
  ordered_json j;
  j["name"] = report.config.name;
  j["variable"] = variable_label(report.config);
  j["scheme"] = to_string(report.config.scheme);
  j["role"] = report.config.params.effect_a != 0.0 ? "type1" : "power";
  j["true_coef"] = report.true_coef;
  j["config"] = config_to_json(report.config);

  ordered_json models = ordered_json::array();
  for (const auto& mr : report.models) {
    ordered_json m;
    m["model"] = to_string(mr.model);
    m["bias_mean"] = mr.bias_mean;
    m["n_bias"] = mr.n_bias;
    m["fit_failures"] = mr.fit_failures;
    ordered_json cells = ordered_json::array();
    for (const auto& [proc, cs] : mr.cells) {
      ordered_json cell;
      cell["procedure"] = to_string(proc);
      cell["rejection_rate_ni"] = cs.rejection_rate_ni;
      cell["rejection_rate_eq"] = cs.rejection_rate_eq;
      cell["n_used_ni"] = cs.n_used_ni;
      cell["n_used_eq"] = cs.n_used_eq;
      cell["mc_stderr_ni"] = cs.mc_stderr_ni;
      cell["mc_stderr_eq"] = cs.mc_stderr_eq;
      cell["nonconvergence_count"] = cs.nonconvergence_count;
      cell["resample_drops"] = cs.resample_drops;
      cells.push_back(std::move(cell));
    }
    m["cells"] = std::move(cells);
    models.push_back(std::move(m));
  }
  j["models"] = std::move(models);
  return j;
}

nlohmann::ordered_json reports_to_json(const std::vector<ScenarioReport>& reports) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : reports) arr.push_back(report_to_json(r));
  return arr;
}

}  // namespace carkit
