#pragma once

#include <Eigen/Dense>

#include <span>

namespace dcp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace linalg {

inline constexpr double kRankTolerance = 1e-10;      // relative to the largest singular value
inline constexpr double kEigenFloor = 1e-12;         // relative to the largest eigenvalue
inline constexpr double kSymmetryTolerance = 1e-8;

/// M_A = I - A(A'A)^{-1}A' for a full-column-rank T x K basis A, K < T.
struct Projector {
  Matrix source;        // A
  Matrix basis;         // orthonormal basis of span(A)
  Matrix annihilator;   // M_A

  /// M_A x without forming a T x T product.
  Matrix apply(const Matrix& x) const { return x - basis * (basis.transpose() * x); }
  Vector apply(const Vector& x) const { return x - basis * (basis.transpose() * x); }
  Index rows() const { return annihilator.rows(); }
};

Projector annihilator(const Matrix& basis);

/// Principal components of a T x T covariance. Columns of `factors` are the
/// leading eigenvectors scaled so that F'F/T = I. Each column is signed so that
/// its entry of largest magnitude is positive.
struct FactorEstimate {
  Matrix factors;          // T x k
  Vector eigenvalues;      // k leading, descending
  Vector explained_share;  // eigenvalues / total
  Vector spectrum;         // all eigenvalues, descending, clipped at zero

  Index count() const { return factors.cols(); }
};

FactorEstimate extract_factors(const Matrix& covariance, Index k);

/// argmax_{k <= k_max} lambda_k / lambda_{k+1}; ties resolve to the smallest k.
Index eigenvalue_ratio_count(std::span<const double> eigenvalues, Index k_max);
inline Index eigenvalue_ratio_count(const Vector& eigenvalues, Index k_max) {
  return eigenvalue_ratio_count(std::span<const double>(eigenvalues.data(), eigenvalues.size()), k_max);
}

/// (1/(rows*T)) X'X for X laid out as rows x T (one series per row).
Matrix pooled_covariance(const Matrix& series_by_row);

}  // namespace linalg
}  // namespace dcp
