#pragma once

// Defactored instrumental-variable estimation of unit-specific exposures to
// idiosyncratic regressors and observed market factors.

#include "dcpanel/linalg.hpp"
#include "dcpanel/panel.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dcp::stage1 {

struct Config {
  Index zeta = 5;               // instrument lags
  std::optional<Index> k_f;     // latent factor count; nullopt selects by eigenvalue ratio
  Index k_max = 8;
  bool intercept = true;
  Index ar_lags = 1;            // lagged outcome prepended to the regressors (0 or 1)
};

struct Inputs {
  std::vector<std::string> units;
  Matrix outcome;                   // N x T
  std::vector<Matrix> regressors;   // per unit T x K (lagged outcome excluded)
  std::vector<Matrix> semi;         // per unit T x K_z
  Matrix observed;                  // T x K_y
  std::vector<std::string> regressor_names;
  std::vector<std::string> semi_names;
  std::vector<std::string> observed_names;

  Index units_count() const { return outcome.rows(); }
  Index periods() const { return outcome.cols(); }
};

struct Defactored {
  Index k_f = 0;
  std::vector<linalg::FactorEstimate> factors;   // F_hat_{-tau}, tau = 0..zeta
  std::vector<std::vector<Matrix>> blocks;       // [tau][unit]: M_{F-tau} M_Y Z_{i,-tau}
};

/// Projects Y (and the constant, when `intercept`) out of each lagged Z_i,
/// extracts k_f pooled principal components per lag and defactors.
Defactored defactor_regressors(const std::vector<Matrix>& semi, const Matrix& observed,
                               const panel::EffectiveSample& sample, Index zeta,
                               std::optional<Index> k_f, Index k_max = 8, bool intercept = true);

struct InstrumentMatrix {
  Matrix values;  // T_eff x K_iv
  Index zeta = 0;
  Index k_z = 0;
  Index k_y = 0;
  bool intercept = false;

  Index k_iv() const { return values.cols(); }
};

/// [block_0, ..., block_zeta, Y, Y_{-1}, (1)].
InstrumentMatrix build_instruments(const std::vector<Matrix>& unit_blocks, const Matrix& observed_eff,
                                   const Matrix& observed_lag_eff, bool intercept, Index k_regressors);

struct Diagnostics {
  double min_singular_a = 0.0;
  double condition_b = 0.0;
  double jitter = 0.0;
};

struct UnitIVFit {
  Vector theta;
  Matrix covariance;   // sandwich, already divided by T
  Vector stderr;
  Vector residuals;    // r - C theta on the effective sample, untransformed
  Diagnostics diagnostics;
};

/// `defactor` may be null when no latent factors are projected out.
UnitIVFit fit_unit_iv(const Vector& outcome, const Matrix& regressors, const InstrumentMatrix& instruments,
                      const linalg::Projector* defactor);

/// (c - A theta)' B^{-1} (c - A theta), the criterion minimised by fit_unit_iv.
double gmm_objective(const Vector& outcome, const Matrix& regressors, const InstrumentMatrix& instruments,
                     const linalg::Projector* defactor, const Vector& theta);

struct Result {
  std::vector<std::string> units;
  std::vector<std::string> param_names;
  std::vector<UnitIVFit> fits;
  panel::EffectiveSample sample;
  Index k_f = 0;
  Index k_iv = 0;
  linalg::FactorEstimate factors;  // contemporaneous F_hat

  Index nt() const { return static_cast<Index>(fits.size()) * sample.length(); }
  /// N x T_eff residual matrix.
  Matrix residual_matrix() const;
  /// N x K coefficient matrix.
  Matrix coefficient_matrix() const;
};

Result run(const Inputs& inputs, const Config& config);

}  // namespace dcp::stage1
