#pragma once

#include "dcpanel/linalg.hpp"

#include <cstdint>
#include <random>

namespace dcp::testing {

inline Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = n01(rng);
  }
  return m;
}

inline Vector gaussian(Index rows, std::mt19937_64& rng) { return gaussian(rows, 1, rng).col(0); }

inline double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

/// Plain least squares through the normal equations, solved by full-pivot LU.
inline Vector normal_equations(const Vector& y, const Matrix& x) {
  return (x.transpose() * x).fullPivLu().solve(x.transpose() * y);
}

/// HC1 standard errors from the textbook sandwich.
inline Vector hc1_stderr(const Vector& y, const Matrix& x) {
  const Index t = x.rows(), k = x.cols();
  const Vector b = normal_equations(y, x);
  const Vector e = y - x * b;
  const Matrix inv = (x.transpose() * x).inverse();
  Matrix meat = Matrix::Zero(k, k);
  for (Index s = 0; s < t; ++s) meat += e(s) * e(s) * x.row(s).transpose() * x.row(s);
  const Matrix cov = inv * meat * inv * (static_cast<double>(t) / static_cast<double>(t - k));
  return cov.diagonal().cwiseSqrt();
}

}  // namespace dcp::testing
