#pragma once

// Synthetic panels from the full return model: heterogeneous exposures to an
// own lag, two idiosyncratic regressors and observed factors, a latent common
// component shared by returns and the semi-endogenous variables, and monthly
// proxies of which the first k_g are the monthly means of the latent factors.

#include "dcpanel/montecarlo.hpp"
#include "dcpanel/panel.hpp"
#include "dcpanel/pipeline.hpp"
#include "dcpanel/stage1.hpp"

namespace dcp::mc {

struct ModelConfig {
  Index N = 50;
  Index T = 100;
  Index k_y = 2;
  Index k_g = 1;                // latent factors, shared by returns and Z
  Index noise_proxies = 10;     // monthly candidates unrelated to g
  double rho_g = 0.5;
  double heterogeneity = 0.1;   // theta_i = theta + U(-h, h) per coefficient
  double endogeneity = 0.3;     // loading of ILQ on the return shock
  double loading_mean = 0.0;    // mean of delta_i, Lambda_i, Phi_i (zero-mean loadings)
  Index burn_in = 50;
  std::uint64_t seed = 1;

  void validate() const;
  /// Population means in stage-1 order: lag, ILQ, VLT, gamma_1..k_y, intercept.
  Vector theta_mean() const;
};

struct ModelDraw {
  stage1::Inputs inputs;          // regressors (ILQ, VLT), semi (VLM, VLT), observed y1..
  std::vector<panel::Date> dates; // weekly, starting Monday 2020-01-06
  Matrix theta;                   // N x K in stage-1 parameter order
  Vector theta_mean;              // same order
  Matrix g;                       // T x k_g
  Matrix delta;                   // N x k_g
  std::vector<panel::Month> months;
  Matrix proxies;                 // months x (k_g + noise_proxies)
  std::vector<std::string> proxy_names;
};

/// Parameter order matches stage1::run with ar_lags = 1 and an intercept:
/// r_lag1, ILQ, VLT, y1..y_ky, const.
ModelDraw generate_model(const ModelConfig& config, Rng& rng);
ModelDraw generate_model(const ModelConfig& config);

/// Panel (covariates ILQ, VLT, VLM), factors, proxies and a scheme "half"
/// labelling the first N/2 units A and the rest B.
pipeline::EstimateInputs estimate_inputs(const ModelDraw& draw);

}  // namespace dcp::mc
