#include "carkit/design.hpp"

#include "carkit/errors.hpp"

namespace carkit {

std::string to_string(ModelSpec spec) {
  switch (spec) {
    case ModelSpec::naive: return "naive";
    case ModelSpec::model1: return "model1";
    case ModelSpec::model2: return "model2";
  }
  return "?";
}

ModelSpec model_spec_from_string(const std::string& name) {
  if (name == "naive") return ModelSpec::naive;
  if (name == "model1") return ModelSpec::model1;
  if (name == "model2") return ModelSpec::model2;
  throw ConfigError("unknown analysis model: '" + name + "'");
}

DesignMatrix build_design(const Dataset& data, ModelSpec spec, ModelKind family) {
  const auto n = static_cast<Eigen::Index>(data.size());
  if (data.arms.size() != data.subjects.size())
    throw DesignError("dataset has no arm assignment for every subject");

  DesignMatrix d;
  d.has_intercept = family != ModelKind::cox;

  std::vector<std::string> labels;
  if (d.has_intercept) labels.push_back("intercept");
  labels.push_back("arm");
  switch (spec) {
    case ModelSpec::naive: break;
    case ModelSpec::model1:
      labels.push_back("baseline");
      labels.push_back("male");
      break;
    case ModelSpec::model2:
      for (int s = 1; s <= 9; ++s) labels.push_back("site_" + std::to_string(s));
      labels.push_back("status_low");
      labels.push_back("status_medium");
      labels.push_back("male");
      break;
  }

  const auto p = static_cast<Eigen::Index>(labels.size());
  d.x.setZero(n, p);
  d.labels = labels;
  d.arm_col = d.has_intercept ? 1 : 0;

  for (Eigen::Index i = 0; i < n; ++i) {
    const Subject& s = data.subjects[static_cast<std::size_t>(i)];
    if (s.site < 1 || s.site > 10)
      throw DesignError("subject " + std::to_string(s.id) +
                        ": site out of range 1..10: " + std::to_string(s.site));
    Eigen::Index c = 0;
    if (d.has_intercept) d.x(i, c++) = 1.0;
    d.x(i, c++) = arm_indicator(data.arms[static_cast<std::size_t>(i)]);
    switch (spec) {
      case ModelSpec::naive: break;
      case ModelSpec::model1:
        d.x(i, c++) = s.baseline;
        d.x(i, c++) = s.male_indicator();
        break;
      case ModelSpec::model2: {
        if (s.site <= 9) d.x(i, c + s.site - 1) = 1.0;
        c += 9;
        const DiseaseStatus st = s.disease_status();
        if (st == DiseaseStatus::low) d.x(i, c) = 1.0;
        if (st == DiseaseStatus::medium) d.x(i, c + 1) = 1.0;
        c += 2;
        d.x(i, c++) = s.male_indicator();
        break;
      }
    }
  }

  // constant non-intercept columns are flagged, never dropped silently
  std::string constant;
  for (Eigen::Index j = d.has_intercept ? 1 : 0; j < p; ++j) {
    if ((d.x.col(j).array() == d.x(0, j)).all()) {
      if (!constant.empty()) constant += ", ";
      constant += labels[static_cast<std::size_t>(j)];
    }
  }
  if (!constant.empty()) throw DesignError("constant design column(s): " + constant);

  return d;
}

void set_arm_column(DesignMatrix& design, const std::vector<Arm>& arms) {
  if (static_cast<Eigen::Index>(arms.size()) != design.x.rows())
    throw DesignError("arm vector length does not match design rows");
  for (Eigen::Index i = 0; i < design.x.rows(); ++i)
    design.x(i, design.arm_col) = arm_indicator(arms[static_cast<std::size_t>(i)]);
}

}  // namespace carkit
