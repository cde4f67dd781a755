#include <Eigen/Dense>
#include <cmath>
#include <optional>

#include "carkit/errors.hpp"
#include "carkit/estimators.hpp"

namespace carkit {

namespace {

double expit(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double log1pexp(double t) { return t > 33.0 ? t : std::log1p(std::exp(t)); }

// information matrix X'WX with W = diag(p(1-p)); returns false if not PD
bool information(const Eigen::MatrixXd& x, const Eigen::VectorXd& prob,
                 Eigen::MatrixXd& info, Eigen::LLT<Eigen::MatrixXd>& llt) {
  const Eigen::ArrayXd w = prob.array() * (1.0 - prob.array());
  info.noalias() = x.transpose() * w.matrix().asDiagonal() * x;
  llt.compute(info);
  return llt.info() == Eigen::Success;
}

std::optional<double> penalized_loglik_impl(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                            const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = x * beta;
  Eigen::VectorXd prob(eta.size());
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    prob[i] = expit(eta[i]);
    ll += y[i] * eta[i] - log1pexp(eta[i]);
  }
  Eigen::MatrixXd info;
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!information(x, prob, info, llt)) return std::nullopt;
  double logdet = 0.0;
  const Eigen::MatrixXd l = llt.matrixL();
  for (Eigen::Index j = 0; j < l.rows(); ++j) logdet += 2.0 * std::log(l(j, j));
  return ll + 0.5 * logdet;
}

}  // namespace

double firth_penalized_loglik(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& beta) {
  const auto ll = penalized_loglik_impl(x, y, beta);
  if (!ll) throw EstimationError("firth_penalized_loglik: information not positive definite");
  return *ll;
}

FitResult fit_firth_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const NewtonOptions& opts) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (y.size() != n) throw EstimationError("fit_firth_logistic: response length mismatch");
  for (Eigen::Index i = 0; i < n; ++i)
    if (y[i] != 0.0 && y[i] != 1.0)
      throw EstimationError("fit_firth_logistic: response must be 0/1");
  if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(x).rank() < p)
    throw EstimationError("fit_firth_logistic: rank-deficient design matrix");

  FitResult r;
  r.model_kind = ModelKind::firth_logistic;
  r.beta = Eigen::VectorXd::Zero(p);

  auto ll_opt = penalized_loglik_impl(x, y, r.beta);
  if (!ll_opt) throw EstimationError("fit_firth_logistic: information singular at start");
  double ll = *ll_opt;

  Eigen::MatrixXd info;
  Eigen::LLT<Eigen::MatrixXd> llt;
  bool ok = false;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const Eigen::VectorXd eta = x * r.beta;
    Eigen::VectorXd prob(n);
    for (Eigen::Index i = 0; i < n; ++i) prob[i] = expit(eta[i]);
    if (!information(x, prob, info, llt)) break;

    // hat values h_i = w_i x_i' (X'WX)^-1 x_i
    const Eigen::MatrixXd v = llt.solve(x.transpose());
    Eigen::VectorXd adj(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double h = prob[i] * (1.0 - prob[i]) * x.row(i).dot(v.col(i));
      adj[i] = y[i] - prob[i] + h * (0.5 - prob[i]);
    }
    const Eigen::VectorXd score = x.transpose() * adj;

    r.iterations = iter;
    if (score.cwiseAbs().maxCoeff() <= opts.tol) {
      ok = true;
      break;
    }

    const Eigen::VectorXd delta = llt.solve(score);
    double step = 1.0;
    bool accepted = false;
    for (int half = 0; half < 30; ++half) {
      const Eigen::VectorXd trial = r.beta + step * delta;
      const auto tll = penalized_loglik_impl(x, y, trial);
      if (tll && *tll >= ll - 1e-10) {
        r.beta = trial;
        ll = *tll;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }

  r.converged = ok;
  const Eigen::VectorXd eta = x * r.beta;
  Eigen::VectorXd prob(n);
  for (Eigen::Index i = 0; i < n; ++i) prob[i] = expit(eta[i]);
  if (information(x, prob, info, llt)) {
    r.vcov = llt.solve(Eigen::MatrixXd::Identity(p, p));
    r.se = r.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
  } else {
    r.vcov = Eigen::MatrixXd::Zero(p, p);
    r.se = Eigen::VectorXd::Zero(p);
    r.converged = false;
  }
  return r;
}

}  // namespace carkit
