#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "carkit/errors.hpp"
#include "carkit/estimators.hpp"

namespace carkit {

RmstData rmst_ipcw(const std::vector<double>& time, const std::vector<int>& event, double tau,
                   double weight_floor) {
  const std::size_t n = time.size();
  if (event.size() != n) throw EstimationError("rmst_ipcw: time/event length mismatch");
  if (!(tau > 0.0)) throw EstimationError("rmst_ipcw: tau must be positive");
  const double max_follow = *std::max_element(time.begin(), time.end());
  if (tau > max_follow) throw EstimationError("rmst_ipcw: tau exceeds maximum follow-up");

  const StepFunction ghat = km_censoring_survival(time, event);

  RmstData d;
  d.ystar.resize(static_cast<Eigen::Index>(n));
  d.weight.resize(static_cast<Eigen::Index>(n));
  int observed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ys = std::min(time[i], tau);
    d.ystar[static_cast<Eigen::Index>(i)] = ys;
    const bool min_observed = (event[i] == 1 && time[i] <= tau) || time[i] >= tau;
    if (min_observed) {
      const double g = std::max(ghat.left_limit(ys), weight_floor);
      d.weight[static_cast<Eigen::Index>(i)] = 1.0 / g;
      ++observed;
    } else {
      d.weight[static_cast<Eigen::Index>(i)] = 0.0;
    }
  }
  if (observed == 0)
    throw EstimationError("rmst_ipcw: every subject censored before tau");
  return d;
}

FitResult fit_rmst_weighted(const Eigen::MatrixXd& x, const RmstData& data,
                            const RmstOptions& opts) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (data.ystar.size() != n || data.weight.size() != n)
    throw EstimationError("fit_rmst_weighted: data length mismatch");

  {
    const Eigen::MatrixXd xw = data.weight.cwiseSqrt().asDiagonal() * x;
    if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(xw).rank() < p)
      throw EstimationError("fit_rmst_weighted: rank-deficient weighted design");
  }

  FitResult r;
  r.model_kind = ModelKind::rmst;
  r.beta = Eigen::VectorXd::Zero(p);

  const double wsum = data.weight.sum();
  const double wy = data.weight.dot(data.ystar);
  if ((x.col(0).array() == 1.0).all() && wy > 0.0) r.beta[0] = std::log(wy / wsum);

  const double scale =
      std::max(1.0, data.weight.cwiseProduct(data.ystar.cwiseAbs()).sum() / static_cast<double>(n));

  auto eq_norm = [&](const Eigen::VectorXd& g) { return g.cwiseAbs().maxCoeff(); };
  auto estimating_eq = [&](const Eigen::VectorXd& beta, Eigen::VectorXd& g, Eigen::VectorXd& mu) {
    const Eigen::VectorXd eta = x * beta;
    mu = eta.array().min(700.0).exp();
    g.noalias() = x.transpose() * (data.weight.array() * (data.ystar - mu).array()).matrix();
  };

  Eigen::VectorXd g(p), mu(n);
  estimating_eq(r.beta, g, mu);

  Eigen::LLT<Eigen::MatrixXd> llt;
  bool ok = false;
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    r.iterations = iter;
    if (eq_norm(g) <= opts.tol * scale) {
      ok = true;
      break;
    }
    const Eigen::MatrixXd jac =
        x.transpose() * (data.weight.array() * mu.array()).matrix().asDiagonal() * x;
    llt.compute(jac);
    if (llt.info() != Eigen::Success) break;

    const Eigen::VectorXd delta = llt.solve(g);
    double step = 1.0;
    bool accepted = false;
    const double g0 = eq_norm(g);
    for (int half = 0; half < 30; ++half) {
      const Eigen::VectorXd trial = r.beta + step * delta;
      Eigen::VectorXd gt(p), mut(n);
      estimating_eq(trial, gt, mut);
      if (gt.allFinite() && eq_norm(gt) < g0) {
        r.beta = trial;
        g = gt;
        mu = mut;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }

  r.converged = ok;

  // sandwich variance A^-1 B A^-1 with A = X' diag(w mu) X
  const Eigen::MatrixXd a =
      x.transpose() * (data.weight.array() * mu.array()).matrix().asDiagonal() * x;
  llt.compute(a);
  if (llt.info() == Eigen::Success) {
    const Eigen::VectorXd u = (data.weight.array() * (data.ystar - mu).array()).matrix();
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < n; ++i)
      b.noalias() += (u[i] * u[i]) * (x.row(i).transpose() * x.row(i));
    const Eigen::MatrixXd ainv = llt.solve(Eigen::MatrixXd::Identity(p, p));
    r.vcov = ainv * b * ainv;
    r.se = r.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
  } else {
    r.vcov = Eigen::MatrixXd::Zero(p, p);
    r.se = Eigen::VectorXd::Zero(p);
    r.converged = false;
  }
  return r;
}

FitResult fit_rmst(const Eigen::MatrixXd& x, const std::vector<double>& time,
                   const std::vector<int>& event, double tau, const RmstOptions& opts) {
  return fit_rmst_weighted(x, rmst_ipcw(time, event, tau, opts.weight_floor), opts);
}

}  // namespace carkit
