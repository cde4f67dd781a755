#include <Eigen/Dense>

#include "carkit/errors.hpp"
#include "carkit/estimators.hpp"

namespace carkit {

FitResult fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (y.size() != n) throw EstimationError("fit_ols: response length mismatch");
  if (n <= p) throw EstimationError("fit_ols: need n > p");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < p) throw EstimationError("fit_ols: singular design matrix");

  FitResult r;
  r.model_kind = ModelKind::ols;
  r.beta = qr.solve(y);

  const Eigen::VectorXd resid = y - x * r.beta;
  const double sigma2 = resid.squaredNorm() / static_cast<double>(n - p);

  // (X'X)^-1 = P (R'R)^-1 P'  from  X P = Q R
  const Eigen::MatrixXd rmat =
      qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
  const Eigen::MatrixXd rinv =
      rmat.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd xtx_inv =
      qr.colsPermutation() * (rinv * rinv.transpose()) * qr.colsPermutation().transpose();

  r.vcov = sigma2 * xtx_inv;
  r.se = r.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.converged = true;
  r.iterations = 1;
  return r;
}

}  // namespace carkit
