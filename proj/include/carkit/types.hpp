#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace carkit {

enum class Arm : int { control = 0, treatment = 1 };

inline int arm_indicator(Arm a) { return a == Arm::treatment ? 1 : 0; }
inline Arm opposite(Arm a) { return a == Arm::treatment ? Arm::control : Arm::treatment; }

enum class Sex : int { female = 0, male = 1 };

enum class DiseaseStatus : int { low = 0, medium = 1, high = 2 };

inline DiseaseStatus disease_status_from(double baseline) {
  if (baseline < 25.0) return DiseaseStatus::low;
  if (baseline > 35.0) return DiseaseStatus::high;
  return DiseaseStatus::medium;
}

// One trial participant. Site, disease status, and sex are the randomization
// factors; disease status is always derived from the continuous baseline.
struct Subject {
  int id = 0;
  int site = 1;          // clinical site, 1..10
  double baseline = 0.0; // continuous baseline efficacy value
  Sex sex = Sex::female;

  DiseaseStatus disease_status() const { return disease_status_from(baseline); }
  double site_value() const { return static_cast<double>(site); }
  double male_indicator() const { return sex == Sex::male ? 1.0 : 0.0; }
};

enum class OutcomeKind : int { normal = 0, binary = 1, tte = 2 };

// Subjects plus assigned arms plus outcome columns. `y` is used for normal
// and binary outcomes, `time`/`event` for time-to-event.
struct Dataset {
  std::vector<Subject> subjects;
  std::vector<Arm> arms;
  OutcomeKind outcome_kind = OutcomeKind::normal;
  std::vector<double> y;
  std::vector<double> time;
  std::vector<int> event;

  std::size_t size() const { return subjects.size(); }
};

enum class ModelSpec : int { naive = 0, model1 = 1, model2 = 2 };

enum class ModelKind : int { ols = 0, firth_logistic = 1, cox = 2, rmst = 3 };

}  // namespace carkit
