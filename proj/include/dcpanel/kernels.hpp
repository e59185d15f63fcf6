#pragma once

// Data-parallel inner loops. Each OpenMP kernel has a serial twin that
// performs the same per-element arithmetic in the same order, so results are
// bit-identical for any thread count. The serial versions are kept as the
// test reference and benchmark baseline.

#include "dcpanel/linalg.hpp"

#include <span>

namespace dcp::kernels {

/// X'X for X of shape m x T.
Matrix cross_product(const Matrix& x);
Matrix cross_product_serial(const Matrix& x);

/// Heteroskedasticity-robust (HC1) t-statistics of b_j in e = z_j b_j + resid,
/// where e and the columns of z have already been residualized on the current
/// design (Frisch-Waugh). `params` counts every coefficient of the full
/// regression including the candidate. Entries with skip[j] != 0, or whose
/// residualized norm fell below `collinear_tol * ref_norm2[j]`, get t = 0.
struct CandidateInputs {
  const Vector& target;
  const Matrix& candidates;
  std::span<const unsigned char> skip;
  std::span<const double> ref_norm2;
  Index params;
  double collinear_tol = 1e-10;
};

void candidate_tstats(const CandidateInputs& in, Vector& out);
void candidate_tstats_serial(const CandidateInputs& in, Vector& out);

/// Number of worker threads the parallel kernels will use.
int max_threads();
/// Sets the worker count for subsequent parallel regions (no-op without OpenMP).
void set_threads(int n);

}  // namespace dcp::kernels
