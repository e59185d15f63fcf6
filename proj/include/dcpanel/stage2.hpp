#pragma once

// Stage 2: map the dominant common direction of the Stage-1 residuals onto a
// sparse set of low-frequency proxies, decompose the fit, and estimate
// per-unit exposures to the selected proxies.

#include "dcpanel/linalg.hpp"
#include "dcpanel/panel.hpp"
#include "dcpanel/selection.hpp"

#include <string>
#include <vector>

namespace dcp::stage2 {

struct LatentComponent {
  Vector weekly;                    // e_1 on the residual sample
  Vector monthly;                   // monthly aggregate (equals weekly when no calendar is given)
  std::vector<panel::Month> months; // empty when no calendar is given
  double explained_share = 0.0;
  Vector spectrum;                  // pooled residual eigenvalues, descending
};

/// Leading principal components of (1/NT) sum_i u_i u_i' for residuals laid out N x T.
/// When `dates` is non-null each component is also averaged within calendar months.
std::vector<LatentComponent> residual_components(const Matrix& residuals, Index k,
                                                 const std::vector<panel::Date>* dates = nullptr,
                                                 const panel::MonthlyOptions& monthly = {});

LatentComponent residual_leading_component(const Matrix& residuals, const std::vector<panel::Date>* dates = nullptr,
                                           const panel::MonthlyOptions& monthly = {});

/// Rows of `pool` (indexed by `pool_months`) matching `target_months`, in order.
selection::CandidatePool align_pool(const selection::CandidatePool& pool, const std::vector<panel::Month>& pool_months,
                                    const std::vector<panel::Month>& target_months);

struct PcaMtbOptions {
  selection::MtbConfig mtb;
  bool components_auto = false;   // union over an eigenvalue-ratio count of components
  Index k_max = 8;
};

struct PcaMtbResult {
  selection::SelectionResult selection;
  Matrix design;                                   // selected pool columns
  std::vector<LatentComponent> components;         // components used (leading first)
  std::vector<selection::SelectionResult> per_component;
};

/// The pool rows must line up with the component's monthly series. With
/// `components_auto`, the pool must also line up with every component.
PcaMtbResult pca_mtb(const Matrix& residuals, const selection::CandidatePool& pool, const PcaMtbOptions& options,
                     const std::vector<panel::Date>* dates = nullptr, const panel::MonthlyOptions& monthly = {});

struct ShapleyReport {
  std::vector<double> shares;
  double total_r2 = 0.0;
};

inline constexpr Index kMaxShapleyPredictors = 20;

/// Exact Shapley-Owen decomposition of the centered R^2 of target on [1, design].
ShapleyReport shapley_owen(const Vector& target, const Matrix& design);

struct ExposureFit {
  double intercept = 0.0;
  Vector delta;
  Vector stderr;
  Vector residual;
};

/// Per-row least squares of `targets` (N x T_m) on [1, design] with HC1 errors.
std::vector<ExposureFit> exposure_regressions(const Matrix& targets, const Matrix& design);

/// Residuals laid out N x T averaged (or median-ed) within calendar months: N x T_m.
panel::MonthlySeries monthly_residuals(const Matrix& residuals, const std::vector<panel::Date>& dates,
                                       const panel::MonthlyOptions& monthly = {});

}  // namespace dcp::stage2
