#pragma once

#include "dcpanel/linalg.hpp"

namespace dcp::stats {

double normal_cdf(double x);
/// 2 * (1 - Phi(|z|)).
double two_sided_p(double z);
double normal_quantile(double p);

/// Least squares with heteroskedasticity-robust (HC1) standard errors.
struct OlsFit {
  Vector coef;
  Vector stderr_hc1;
  Vector residuals;
  double r2 = 0.0;
};

/// Fits y on the columns of x as given (add a constant column for an intercept).
OlsFit ols_hc1(const Vector& y, const Matrix& x);

/// Centered R^2 of y regressed on [1, x]; pseudo-inverse handles collinear columns.
double r_squared(const Vector& y, const Matrix& x);

}  // namespace dcp::stats
