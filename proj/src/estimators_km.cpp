#include <algorithm>
#include <stdexcept>

#include "carkit/errors.hpp"
#include "carkit/estimators.hpp"

namespace carkit {

StepFunction::StepFunction(std::vector<double> jump_times, std::vector<double> values)
    : times_(std::move(jump_times)), values_(std::move(values)) {
  if (times_.size() != values_.size())
    throw std::invalid_argument("StepFunction: times/values length mismatch");
  if (!std::is_sorted(times_.begin(), times_.end()))
    throw std::invalid_argument("StepFunction: jump times not sorted");
}

double StepFunction::operator()(double t) const {
  // value after the last jump time <= t
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 1.0;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double StepFunction::left_limit(double t) const {
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 1.0;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

StepFunction km_censoring_survival(const std::vector<double>& time,
                                   const std::vector<int>& event) {
  const std::size_t n = time.size();
  if (event.size() != n) throw EstimationError("km_censoring_survival: length mismatch");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return time[a] < time[b]; });

  std::vector<double> jump_times;
  std::vector<double> values;
  double surv = 1.0;
  std::size_t i = 0;
  std::size_t at_risk = n;
  while (i < n) {
    const double t = time[order[i]];
    std::size_t j = i;
    int censored = 0;
    while (j < n && time[order[j]] == t) {
      if (event[order[j]] == 0) ++censored;
      ++j;
    }
    if (censored > 0) {
      surv *= 1.0 - static_cast<double>(censored) / static_cast<double>(at_risk);
      jump_times.push_back(t);
      values.push_back(surv);
    }
    at_risk -= j - i;
    i = j;
  }
  return StepFunction(std::move(jump_times), std::move(values));
}

}  // namespace carkit
