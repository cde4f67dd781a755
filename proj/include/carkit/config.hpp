#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "carkit/harness.hpp"

namespace carkit {

struct SimulationPlan {
  std::vector<SimConfig> scenarios;
  int threads = 0;              // 0 = default
  std::string output_json;      // optional report paths
  std::string output_tables;
};

// Strict JSON config: unknown keys are errors, parse failures carry
// line/column positions.
SimulationPlan parse_simulation_plan(const nlohmann::json& doc);
SimulationPlan load_simulation_plan(const std::string& path);

nlohmann::ordered_json config_to_json(const SimConfig& config);
nlohmann::ordered_json report_to_json(const ScenarioReport& report);
nlohmann::ordered_json reports_to_json(const std::vector<ScenarioReport>& reports);

}  // namespace carkit
