#include "dcpanel/linalg.hpp"

#include "dcpanel/error.hpp"
#include "dcpanel/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace dcp::linalg {

Projector annihilator(const Matrix& basis) {
  const Index t = basis.rows();
  const Index k = basis.cols();
  if (k < 1 || t < 1) fail(ErrorCode::DimensionMismatch, "empty basis");
  if (k >= t) {
    fail(ErrorCode::DimensionMismatch,
         "basis has " + std::to_string(k) + " columns but only " + std::to_string(t) + " rows");
  }
  if (!basis.allFinite()) fail(ErrorCode::InvalidInput, "basis contains non-finite entries");

  Eigen::JacobiSVD<Matrix> svd(basis, Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  if (sv(0) <= 0.0 || sv(k - 1) <= kRankTolerance * sv(0)) {
    fail(ErrorCode::RankDeficient, "basis columns are linearly dependent (sv ratio " +
                                       std::to_string(sv(0) > 0 ? sv(k - 1) / sv(0) : 0.0) + ")");
  }

  Projector p;
  p.source = basis;
  p.basis = svd.matrixU();
  p.annihilator = Matrix::Identity(t, t) - p.basis * p.basis.transpose();
  p.annihilator = 0.5 * (p.annihilator + p.annihilator.transpose()).eval();
  return p;
}

FactorEstimate extract_factors(const Matrix& covariance, Index k) {
  const Index t = covariance.rows();
  if (covariance.cols() != t) fail(ErrorCode::DimensionMismatch, "covariance must be square");
  if (k < 1 || k >= t) {
    fail(ErrorCode::KTooLarge, "factor count " + std::to_string(k) + " outside [1, " +
                                   std::to_string(t - 1) + "]");
  }
  const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
    fail(ErrorCode::NotSymmetric, "covariance is not symmetric");
  }

  const Matrix sym = 0.5 * (covariance + covariance.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) fail(ErrorCode::NoConvergence, "eigendecomposition failed");

  // Eigen returns ascending order.
  Vector spectrum = eig.eigenvalues().reverse();
  const double top = std::max(spectrum(0), 0.0);
  for (Index j = 0; j < t; ++j) {
    if (spectrum(j) < kEigenFloor * top) spectrum(j) = 0.0;
  }
  const double total = spectrum.sum();

  FactorEstimate out;
  out.factors.resize(t, k);
  out.eigenvalues = spectrum.head(k);
  out.explained_share =
      total > 0.0 ? Vector(out.eigenvalues / total) : Vector(Vector::Zero(k));
  out.spectrum = spectrum;

  const double root_t = std::sqrt(static_cast<double>(t));
  for (Index j = 0; j < k; ++j) {
    Vector v = eig.eigenvectors().col(t - 1 - j);
    Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    out.factors.col(j) = v * root_t;
  }
  return out;
}

Index eigenvalue_ratio_count(std::span<const double> eigenvalues, Index k_max) {
  if (k_max < 1 || static_cast<Index>(eigenvalues.size()) <= k_max) {
    fail(ErrorCode::EmptySpectrum, "need more than k_max=" + std::to_string(k_max) +
                                       " eigenvalues, got " + std::to_string(eigenvalues.size()));
  }
  Index best = 1;
  double best_ratio = -1.0;
  for (Index k = 1; k <= k_max; ++k) {
    const double num = eigenvalues[k - 1];
    const double den = eigenvalues[k];
    double ratio;
    if (den > 0.0) {
      ratio = num / den;
    } else {
      ratio = num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = k;
    }
  }
  return best;
}

Matrix pooled_covariance(const Matrix& series_by_row) {
  const double denom = static_cast<double>(series_by_row.rows()) * static_cast<double>(series_by_row.cols());
  Matrix c = kernels::cross_product(series_by_row);
  c /= denom;
  return c;
}

}  // namespace dcp::linalg
