#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "carkit/types.hpp"

namespace carkit {

struct DesignMatrix {
  Eigen::MatrixXd x;
  std::vector<std::string> labels;
  Eigen::Index arm_col = 0;  // column holding the treatment indicator
  bool has_intercept = false;
};

// Columns by analysis model:
//   naive:  intercept, arm
//   model1: intercept, arm, baseline, male
//   model2: intercept, arm, site_1..site_9 (site 10 reference),
//           status_low, status_medium (high reference), male
// Cox drops the intercept. Throws DesignError on an out-of-range factor level
// or a constant non-intercept column.
DesignMatrix build_design(const Dataset& data, ModelSpec spec, ModelKind family);

// Replace only the treatment column (used by resampling refits).
void set_arm_column(DesignMatrix& design, const std::vector<Arm>& arms);

std::string to_string(ModelSpec spec);
ModelSpec model_spec_from_string(const std::string& name);

}  // namespace carkit
