#include "dcpanel/kernels.hpp"

#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dcp::kernels {
namespace {

inline double column_dot(const Matrix& x, Index a, Index b) {
  const double* pa = x.col(a).data();
  const double* pb = x.col(b).data();
  double s = 0.0;
  for (Index r = 0; r < x.rows(); ++r) s += pa[r] * pb[r];
  return s;
}

inline double candidate_t(const CandidateInputs& in, Index j) {
  if (!in.skip.empty() && in.skip[static_cast<std::size_t>(j)]) return 0.0;
  const Index t = in.target.size();
  const double* z = in.candidates.col(j).data();
  const double* e = in.target.data();
  double zz = 0.0, ze = 0.0;
  for (Index s = 0; s < t; ++s) {
    zz += z[s] * z[s];
    ze += z[s] * e[s];
  }
  const double ref = in.ref_norm2.empty() ? 1.0 : in.ref_norm2[static_cast<std::size_t>(j)];
  if (!(zz > in.collinear_tol * ref)) return 0.0;
  const double b = ze / zz;
  double meat = 0.0;
  for (Index s = 0; s < t; ++s) {
    const double res = e[s] - b * z[s];
    meat += z[s] * z[s] * res * res;
  }
  const double dof = static_cast<double>(t - in.params);
  if (dof <= 0.0) return 0.0;
  const double var = meat / (zz * zz) * static_cast<double>(t) / dof;
  if (!(var > 0.0)) {
    if (b == 0.0) return 0.0;
    return b > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
  return b / std::sqrt(var);
}

}  // namespace

Matrix cross_product_serial(const Matrix& x) {
  const Index t = x.cols();
  Matrix out(t, t);
  for (Index a = 0; a < t; ++a) {
    for (Index b = 0; b <= a; ++b) {
      const double v = column_dot(x, a, b);
      out(a, b) = v;
      out(b, a) = v;
    }
  }
  return out;
}

Matrix cross_product(const Matrix& x) {
  const Index t = x.cols();
  Matrix out(t, t);
#pragma omp parallel for schedule(dynamic, 4)
  for (Index a = 0; a < t; ++a) {
    for (Index b = 0; b <= a; ++b) {
      const double v = column_dot(x, a, b);
      out(a, b) = v;
      out(b, a) = v;
    }
  }
  return out;
}

void candidate_tstats_serial(const CandidateInputs& in, Vector& out) {
  const Index n = in.candidates.cols();
  out.resize(n);
  for (Index j = 0; j < n; ++j) out(j) = candidate_t(in, j);
}

void candidate_tstats(const CandidateInputs& in, Vector& out) {
  const Index n = in.candidates.cols();
  out.resize(n);
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < n; ++j) out(j) = candidate_t(in, j);
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace dcp::kernels
