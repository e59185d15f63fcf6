#include "dcpanel/stats.hpp"

#include "dcpanel/error.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>

namespace dcp::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double two_sided_p(double z) {
  if (std::isinf(z)) return 0.0;
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, p);
}

OlsFit ols_hc1(const Vector& y, const Matrix& x) {
  const Index t = x.rows();
  const Index k = x.cols();
  if (y.size() != t) fail(ErrorCode::DimensionMismatch, "ols: y and x row counts differ");
  if (t <= k) fail(ErrorCode::DegreesOfFreedomExhausted, "ols: need more rows than columns");

  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) fail(ErrorCode::RankDeficientDesign, "ols: design is rank deficient");

  OlsFit fit;
  fit.coef = qr.solve(y);
  fit.residuals = y - x * fit.coef;

  const Matrix xtx_inv = (x.transpose() * x).ldlt().solve(Matrix::Identity(k, k));
  Matrix meat = Matrix::Zero(k, k);
  for (Index s = 0; s < t; ++s) {
    const double e2 = fit.residuals(s) * fit.residuals(s);
    meat.noalias() += e2 * x.row(s).transpose() * x.row(s);
  }
  const Matrix cov = xtx_inv * meat * xtx_inv * (static_cast<double>(t) / static_cast<double>(t - k));
  fit.stderr_hc1 = cov.diagonal().cwiseMax(0.0).cwiseSqrt();

  const double ybar = y.mean();
  const double sst = (y.array() - ybar).square().sum();
  fit.r2 = sst > 0.0 ? 1.0 - fit.residuals.squaredNorm() / sst : 0.0;
  return fit;
}

double r_squared(const Vector& y, const Matrix& x) {
  if (x.cols() == 0) return 0.0;
  const Vector yc = y.array() - y.mean();
  const double sst = yc.squaredNorm();
  if (!(sst > 0.0)) return 0.0;
  Matrix xc = x.rowwise() - x.colwise().mean();
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(xc);
  cod.setThreshold(1e-10);
  const Vector b = cod.solve(yc);
  const Vector res = yc - xc * b;
  return 1.0 - res.squaredNorm() / sst;
}

}  // namespace dcp::stats
