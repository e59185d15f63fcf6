#include "dcpanel/stage2.hpp"

#include "dcpanel/error.hpp"
#include "dcpanel/stats.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace dcp::stage2 {

std::vector<LatentComponent> residual_components(const Matrix& residuals, Index k,
                                                 const std::vector<panel::Date>* dates,
                                                 const panel::MonthlyOptions& monthly) {
  if (residuals.rows() < 2) fail(ErrorCode::InvalidInput, "residual PCA needs at least 2 units");
  if (!residuals.allFinite()) fail(ErrorCode::InvalidInput, "residuals contain non-finite values");
  const Index t = residuals.cols();
  if (dates && static_cast<Index>(dates->size()) != t) {
    fail(ErrorCode::DimensionMismatch, "residual dates do not match the residual sample");
  }
  const Matrix cov = linalg::pooled_covariance(residuals);
  const linalg::FactorEstimate f = linalg::extract_factors(cov, k);

  std::optional<panel::MonthlySeries> agg;
  if (dates) agg = panel::aggregate_to_months(f.factors, *dates, monthly);

  std::vector<LatentComponent> out(static_cast<std::size_t>(k));
  for (Index c = 0; c < k; ++c) {
    LatentComponent& lc = out[static_cast<std::size_t>(c)];
    lc.weekly = f.factors.col(c);
    lc.explained_share = f.explained_share(c);
    lc.spectrum = f.spectrum;
    if (agg) {
      lc.monthly = agg->values.col(c);
      lc.months = agg->months;
    } else {
      lc.monthly = lc.weekly;
    }
  }
  return out;
}

LatentComponent residual_leading_component(const Matrix& residuals, const std::vector<panel::Date>* dates,
                                           const panel::MonthlyOptions& monthly) {
  return residual_components(residuals, 1, dates, monthly).front();
}

selection::CandidatePool align_pool(const selection::CandidatePool& pool, const std::vector<panel::Month>& pool_months,
                                    const std::vector<panel::Month>& target_months) {
  if (static_cast<Index>(pool_months.size()) != pool.periods()) {
    fail(ErrorCode::DimensionMismatch, "pool months do not match pool rows");
  }
  selection::CandidatePool out;
  out.names = pool.names;
  out.matrix.resize(static_cast<Index>(target_months.size()), pool.size());
  for (std::size_t m = 0; m < target_months.size(); ++m) {
    const auto it = std::find(pool_months.begin(), pool_months.end(), target_months[m]);
    if (it == pool_months.end()) {
      fail(ErrorCode::InvalidInput, "proxy data missing month " + panel::format_month(target_months[m]));
    }
    out.matrix.row(static_cast<Index>(m)) = pool.matrix.row(static_cast<Index>(it - pool_months.begin()));
  }
  return out;
}

PcaMtbResult pca_mtb(const Matrix& residuals, const selection::CandidatePool& pool, const PcaMtbOptions& options,
                     const std::vector<panel::Date>* dates, const panel::MonthlyOptions& monthly) {
  PcaMtbResult out;
  Index k = 1;
  if (options.components_auto) {
    const Matrix cov = linalg::pooled_covariance(residuals);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (cov + cov.transpose()), Eigen::EigenvaluesOnly);
    const Vector spectrum = eig.eigenvalues().reverse().cwiseMax(0.0);
    const Index cap = std::min(options.k_max, spectrum.size() - 1);
    k = linalg::eigenvalue_ratio_count(spectrum, cap);
  }
  out.components = residual_components(residuals, k, dates, monthly);

  std::set<Index> seen;
  out.selection.method = "PCA-MTB";
  for (const LatentComponent& c : out.components) {
    if (c.monthly.size() != pool.periods()) {
      fail(ErrorCode::DimensionMismatch, "component has " + std::to_string(c.monthly.size()) +
                                             " periods but the pool has " + std::to_string(pool.periods()));
    }
    selection::SelectionResult r = selection::mtb_select(c.monthly, pool, options.mtb);
    for (std::size_t s = 0; s < r.selected.size(); ++s) {
      if (seen.insert(r.selected[s]).second) {
        out.selection.selected.push_back(r.selected[s]);
        out.selection.steps.push_back(r.steps[s]);
      }
    }
    out.per_component.push_back(std::move(r));
  }
  out.design.resize(pool.periods(), static_cast<Index>(out.selection.selected.size()));
  for (std::size_t s = 0; s < out.selection.selected.size(); ++s) {
    out.design.col(static_cast<Index>(s)) = pool.matrix.col(out.selection.selected[s]);
  }
  return out;
}

ShapleyReport shapley_owen(const Vector& target, const Matrix& design) {
  const Index s = design.cols();
  if (s > kMaxShapleyPredictors) {
    fail(ErrorCode::TooManyPredictors, std::to_string(s) + " predictors exceed the exact-enumeration limit of " +
                                           std::to_string(kMaxShapleyPredictors));
  }
  if (design.rows() != target.size()) fail(ErrorCode::DimensionMismatch, "design rows differ from target length");
  ShapleyReport out;
  out.shares.assign(static_cast<std::size_t>(s), 0.0);
  if (s == 0) return out;

  // Centered cross-products; R^2(W) = c_W' G_W^+ c_W / yy.
  const Vector yc = target.array() - target.mean();
  const Matrix xc = design.rowwise() - design.colwise().mean();
  const Matrix gram = xc.transpose() * xc;
  const Vector cross = xc.transpose() * yc;
  const double yy = yc.squaredNorm();

  const std::size_t subsets = std::size_t{1} << s;
  std::vector<double> r2(subsets, 0.0);
  if (yy > 0.0) {
    for (std::size_t mask = 1; mask < subsets; ++mask) {
      std::vector<Index> cols;
      for (Index j = 0; j < s; ++j) {
        if (mask & (std::size_t{1} << j)) cols.push_back(j);
      }
      const Index m = static_cast<Index>(cols.size());
      Matrix g(m, m);
      Vector c(m);
      for (Index a = 0; a < m; ++a) {
        c(a) = cross(cols[static_cast<std::size_t>(a)]);
        for (Index b = 0; b < m; ++b) g(a, b) = gram(cols[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]);
      }
      const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(g);
      r2[mask] = c.dot(cod.solve(c)) / yy;
    }
  }

  // weight(|W|) = |W|! (s - |W| - 1)! / s!
  std::vector<double> weight(static_cast<std::size_t>(s));
  for (Index w = 0; w < s; ++w) {
    weight[static_cast<std::size_t>(w)] =
        std::exp(std::lgamma(w + 1.0) + std::lgamma(static_cast<double>(s - w)) - std::lgamma(s + 1.0));
  }
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    const auto size = static_cast<std::size_t>(__builtin_popcountll(mask));
    for (Index j = 0; j < s; ++j) {
      const std::size_t bit = std::size_t{1} << j;
      if (mask & bit) continue;
      out.shares[static_cast<std::size_t>(j)] += weight[size] * (r2[mask | bit] - r2[mask]);
    }
  }
  out.total_r2 = r2[subsets - 1];
  return out;
}

std::vector<ExposureFit> exposure_regressions(const Matrix& targets, const Matrix& design) {
  const Index n = targets.rows();
  const Index t = targets.cols();
  if (design.rows() != t) fail(ErrorCode::DimensionMismatch, "exposure design rows differ from target length");
  Matrix x(t, design.cols() + 1);
  x.col(0).setOnes();
  x.rightCols(design.cols()) = design;

  std::vector<ExposureFit> out(static_cast<std::size_t>(n));
  std::vector<std::string> errors(static_cast<std::size_t>(n));
  std::vector<int> codes(static_cast<std::size_t>(n), -1);
#pragma omp parallel for schedule(dynamic)
  for (Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    try {
      const stats::OlsFit fit = stats::ols_hc1(targets.row(i).transpose(), x);
      out[ui].intercept = fit.coef(0);
      out[ui].delta = fit.coef.tail(design.cols());
      out[ui].stderr = fit.stderr_hc1.tail(design.cols());
      out[ui].residual = fit.residuals;
    } catch (const Error& e) {
      errors[ui] = e.what();
      codes[ui] = static_cast<int>(e.code());
    }
  }
  for (Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (codes[ui] >= 0) {
      throw Error(static_cast<ErrorCode>(codes[ui]), "exposure regression for unit " + std::to_string(i) + ": " + errors[ui]);
    }
  }
  return out;
}

panel::MonthlySeries monthly_residuals(const Matrix& residuals, const std::vector<panel::Date>& dates,
                                       const panel::MonthlyOptions& monthly) {
  panel::MonthlySeries m = panel::aggregate_to_months(residuals.transpose(), dates, monthly);
  m.values.transposeInPlace();
  return m;
}

}  // namespace dcp::stage2
