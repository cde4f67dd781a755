#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "carkit/errors.hpp"
#include "carkit/estimators.hpp"

namespace carkit {

namespace {

struct CoxWork {
  Eigen::MatrixXd xc;            // column-centered covariates
  std::vector<int> order;        // indices sorted by time descending
  const std::vector<double>* time = nullptr;
  const std::vector<int>* event = nullptr;
};

// One pass over the Breslow partial likelihood: fills loglik, score, info.
// Risk sums are rescaled by max(eta) for overflow safety.
void breslow_pass(const CoxWork& w, const Eigen::VectorXd& beta, double* loglik,
                  Eigen::VectorXd* score, Eigen::MatrixXd* info) {
  const Eigen::Index n = w.xc.rows();
  const Eigen::Index p = w.xc.cols();
  const Eigen::VectorXd eta = w.xc * beta;
  const double m = eta.maxCoeff();

  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
  double ll = 0.0;
  if (score) score->setZero(p);
  if (info) info->setZero(p, p);

  Eigen::Index i = 0;
  while (i < n) {
    const double t = (*w.time)[static_cast<std::size_t>(w.order[static_cast<std::size_t>(i)])];
    Eigen::Index j = i;
    while (j < n &&
           (*w.time)[static_cast<std::size_t>(w.order[static_cast<std::size_t>(j)])] == t) {
      const int idx = w.order[static_cast<std::size_t>(j)];
      const double e = std::exp(eta[idx] - m);
      s0 += e;
      s1.noalias() += e * w.xc.row(idx).transpose();
      if (info) s2.noalias() += e * (w.xc.row(idx).transpose() * w.xc.row(idx));
      ++j;
    }
    int d = 0;
    Eigen::VectorXd ssum = Eigen::VectorXd::Zero(p);
    for (Eigen::Index k = i; k < j; ++k) {
      const int idx = w.order[static_cast<std::size_t>(k)];
      if ((*w.event)[static_cast<std::size_t>(idx)]) {
        ++d;
        ssum.noalias() += w.xc.row(idx).transpose();
      }
    }
    if (d > 0) {
      ll += ssum.dot(beta) - d * (std::log(s0) + m);
      const Eigen::VectorXd xbar = s1 / s0;
      if (score) score->noalias() += ssum - d * xbar;
      if (info) info->noalias() += d * (s2 / s0 - xbar * xbar.transpose());
    }
    i = j;
  }
  if (loglik) *loglik = ll;
}

CoxWork make_work(const Eigen::MatrixXd& x, const std::vector<double>& time,
                  const std::vector<int>& event) {
  const Eigen::Index n = x.rows();
  if (static_cast<Eigen::Index>(time.size()) != n ||
      static_cast<Eigen::Index>(event.size()) != n)
    throw EstimationError("fit_cox: time/event length mismatch");
  if (std::none_of(event.begin(), event.end(), [](int e) { return e != 0; }))
    throw EstimationError("fit_cox: no events");

  CoxWork w;
  w.xc = x.rowwise() - x.colwise().mean();  // location shift leaves the rank statistic intact
  w.time = &time;
  w.event = &event;
  w.order.resize(static_cast<std::size_t>(n));
  std::iota(w.order.begin(), w.order.end(), 0);
  std::sort(w.order.begin(), w.order.end(),
            [&](int a, int b) { return time[static_cast<std::size_t>(a)] > time[static_cast<std::size_t>(b)]; });
  return w;
}

}  // namespace

double cox_log_partial_likelihood(const Eigen::MatrixXd& x, const std::vector<double>& time,
                                  const std::vector<int>& event, const Eigen::VectorXd& beta) {
  const CoxWork w = make_work(x, time, event);
  double ll = 0.0;
  breslow_pass(w, beta, &ll, nullptr, nullptr);
  return ll;
}

FitResult fit_cox(const Eigen::MatrixXd& x, const std::vector<double>& time,
                  const std::vector<int>& event, const NewtonOptions& opts) {
  const Eigen::Index p = x.cols();
  if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(x).rank() < p)
    throw EstimationError("fit_cox: rank-deficient design matrix");
  const CoxWork w = make_work(x, time, event);

  FitResult r;
  r.model_kind = ModelKind::cox;
  r.beta = Eigen::VectorXd::Zero(p);

  double ll = 0.0;
  Eigen::VectorXd score(p);
  Eigen::MatrixXd info(p, p);
  breslow_pass(w, r.beta, &ll, &score, &info);

  Eigen::LLT<Eigen::MatrixXd> llt;
  bool ok = false;
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    r.iterations = iter;
    if (score.cwiseAbs().maxCoeff() <= opts.tol) {
      ok = true;
      break;
    }
    llt.compute(info);
    if (llt.info() != Eigen::Success) break;  // near-singular information

    const Eigen::VectorXd delta = llt.solve(score);
    double step = 1.0;
    bool accepted = false;
    for (int half = 0; half < 30; ++half) {
      const Eigen::VectorXd trial = r.beta + step * delta;
      double tll = 0.0;
      breslow_pass(w, trial, &tll, nullptr, nullptr);
      if (std::isfinite(tll) && tll >= ll - 1e-10) {
        r.beta = trial;
        ll = tll;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    if (r.beta.cwiseAbs().maxCoeff() > 20.0) break;  // monotone partial likelihood
    breslow_pass(w, r.beta, &ll, &score, &info);
  }

  r.converged = ok;
  breslow_pass(w, r.beta, &ll, &score, &info);
  llt.compute(info);
  if (llt.info() == Eigen::Success) {
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
