#pragma once

#include <Eigen/Dense>
#include <vector>

#include "carkit/types.hpp"

namespace carkit {

struct FitResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
  Eigen::MatrixXd vcov;
  bool converged = false;
  int iterations = 0;
  ModelKind model_kind = ModelKind::ols;
};

// Right-continuous nonincreasing step function on [0, inf), value 1 before the
// first jump. Used for the censoring-survival curve.
class StepFunction {
public:
  StepFunction() = default;
  StepFunction(std::vector<double> jump_times, std::vector<double> values);

  double operator()(double t) const;  // right-continuous value at t
  double left_limit(double t) const;  // value just before t

  const std::vector<double>& jump_times() const { return times_; }
  const std::vector<double>& values() const { return values_; }

private:
  std::vector<double> times_;
  std::vector<double> values_;
};

// Ordinary least squares. vcov = sigma2 * (X'X)^-1 with sigma2 = RSS/(n-p).
// Throws EstimationError on n <= p or a rank-deficient design.
FitResult fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

struct NewtonOptions {
  double tol = 1e-8;
  int max_iter = 50;
};

// Firth-penalized logistic regression. Newton iterations on the penalized
// score (hat-value form), step-halving on penalized likelihood decrease,
// vcov = I(beta)^-1 at the optimum. Estimates stay finite under separation.
FitResult fit_firth_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const NewtonOptions& opts = {});

double firth_penalized_loglik(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& beta);

// Cox proportional hazards by Newton on the Breslow log partial likelihood.
// Monotone likelihood is reported as non-convergence (|beta| cap 20), not as
// an exception. Throws EstimationError when no events are present or the
// design is rank deficient.
FitResult fit_cox(const Eigen::MatrixXd& x, const std::vector<double>& time,
                  const std::vector<int>& event, const NewtonOptions& opts = {});

double cox_log_partial_likelihood(const Eigen::MatrixXd& x, const std::vector<double>& time,
                                  const std::vector<int>& event, const Eigen::VectorXd& beta);

// Kaplan-Meier estimate of the censoring survival curve (censoring treated as
// the event of interest).
StepFunction km_censoring_survival(const std::vector<double>& time,
                                   const std::vector<int>& event);

struct RmstOptions {
  double tol = 1e-8;
  int max_iter = 50;
  double weight_floor = 0.05;  // floor on G-hat in the IPCW denominator
};

// Restricted-mean-survival-time regression with log link: solves the IPCW
// estimating equations sum_i w_i x_i (min(T_i,tau) - exp(x_i'beta)) = 0 with
// w_i = delta*_i / G-hat(min(T_i,tau)-). Variance by the sandwich estimator.
FitResult fit_rmst(const Eigen::MatrixXd& x, const std::vector<double>& time,
                   const std::vector<int>& event, double tau, const RmstOptions& opts = {});

// Weights and truncated outcomes for the RMST fit; exposed so resampling can
// compute them once per dataset (they do not depend on arm labels).
struct RmstData {
  Eigen::VectorXd ystar;   // min(T, tau)
  Eigen::VectorXd weight;  // IPCW weights, 0 for unobserved min(T, tau)
};
RmstData rmst_ipcw(const std::vector<double>& time, const std::vector<int>& event, double tau,
                   double weight_floor = 0.05);

FitResult fit_rmst_weighted(const Eigen::MatrixXd& x, const RmstData& data,
                            const RmstOptions& opts = {});

}  // namespace carkit
