#include "dcpanel/synthetic.hpp"

#include "dcpanel/error.hpp"

#include <chrono>
#include <cmath>

namespace dcp::mc {

void ModelConfig::validate() const {
  if (N < 2) fail(ErrorCode::InvalidConfig, "synthetic panel needs N >= 2");
  if (T < 20) fail(ErrorCode::InvalidConfig, "synthetic panel needs T >= 20");
  if (k_y < 0 || k_g < 1 || noise_proxies < 0) fail(ErrorCode::InvalidConfig, "factor counts out of range");
  if (!(rho_g >= 0.0 && rho_g < 1.0)) fail(ErrorCode::InvalidConfig, "rho_g must lie in [0, 1)");
  if (!(heterogeneity >= 0.0 && heterogeneity < 0.5)) fail(ErrorCode::InvalidConfig, "heterogeneity must lie in [0, 0.5)");
  if (!std::isfinite(loading_mean)) fail(ErrorCode::InvalidConfig, "loading_mean must be finite");
  if (burn_in < 0) fail(ErrorCode::InvalidConfig, "burn_in must be non-negative");
}

Vector ModelConfig::theta_mean() const {
  Vector m(4 + k_y);
  m(0) = 0.3;    // own lag
  m(1) = 0.5;    // ILQ
  m(2) = -0.5;   // VLT
  for (Index j = 0; j < k_y; ++j) m(3 + j) = j % 2 == 0 ? 1.0 : -0.5;
  m(3 + k_y) = 0.1;   // intercept
  return m;
}

ModelDraw generate_model(const ModelConfig& c, Rng& rng) {
  c.validate();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const Index total = c.T + c.burn_in;
  const Index k = 4 + c.k_y;

  // Common series: observed factors y (AR 0.3) and latent g (AR rho_g), unit variance.
  auto ar_series = [&](Index cols, double rho) {
    Matrix s(total, cols);
    const double scale = std::sqrt(1.0 - rho * rho);
    for (Index j = 0; j < cols; ++j) s(0, j) = normal(rng);
    for (Index t = 1; t < total; ++t)
      for (Index j = 0; j < cols; ++j) s(t, j) = rho * s(t - 1, j) + scale * normal(rng);
    return s;
  };
  const Matrix y = ar_series(c.k_y, 0.3);
  const Matrix g = ar_series(c.k_g, c.rho_g);

  ModelDraw d;
  d.theta_mean = c.theta_mean();
  d.theta.resize(c.N, k);
  d.delta.resize(c.N, c.k_g);
  d.inputs.outcome.resize(c.N, c.T);
  d.inputs.regressors.resize(static_cast<std::size_t>(c.N));
  d.inputs.semi.resize(static_cast<std::size_t>(c.N));

  for (Index i = 0; i < c.N; ++i) {
    Vector th(k);
    for (Index j = 0; j < k; ++j) th(j) = d.theta_mean(j) + c.heterogeneity * unit(rng);
    d.theta.row(i) = th.transpose();
    for (Index j = 0; j < c.k_g; ++j) d.delta(i, j) = c.loading_mean + normal(rng);
    Matrix lambda(2, c.k_g), phi(2, c.k_y);
    for (Index a = 0; a < 2; ++a) {
      for (Index j = 0; j < c.k_g; ++j) lambda(a, j) = c.loading_mean + normal(rng);
      for (Index j = 0; j < c.k_y; ++j) phi(a, j) = c.loading_mean + 0.5 * normal(rng);
    }
    const double kappa = 1.0 + 0.2 * unit(rng);

    Vector r_prev = Vector::Zero(1);
    Matrix x(c.T, 2), z(c.T, 2);
    for (Index t = 0; t < total; ++t) {
      const double eps = normal(rng);
      const double vlm = lambda.row(0).dot(g.row(t)) + phi.row(0).dot(y.row(t)) + normal(rng);
      const double vlt = lambda.row(1).dot(g.row(t)) + phi.row(1).dot(y.row(t)) + normal(rng);
      // ILQ responds to the contemporaneous return shock; VLM does not.
      const double ilq = kappa * vlm + c.endogeneity * eps + 0.5 * normal(rng);
      double r = th(0) * r_prev(0) + th(1) * ilq + th(2) * vlt + th(3 + c.k_y) +
                 d.delta.row(i).dot(g.row(t)) + eps;
      for (Index j = 0; j < c.k_y; ++j) r += th(3 + j) * y(t, j);
      r_prev(0) = r;
      if (t < c.burn_in) continue;
      const Index s = t - c.burn_in;
      d.inputs.outcome(i, s) = r;
      x(s, 0) = ilq;
      x(s, 1) = vlt;
      z(s, 0) = vlm;
      z(s, 1) = vlt;
    }
    d.inputs.regressors[static_cast<std::size_t>(i)] = std::move(x);
    d.inputs.semi[static_cast<std::size_t>(i)] = std::move(z);
    d.inputs.units.push_back("u" + std::to_string(i + 1));
  }
  d.inputs.observed = y.bottomRows(c.T);
  d.g = g.bottomRows(c.T);
  d.inputs.regressor_names = {"ILQ", "VLT"};
  d.inputs.semi_names = {"VLM", "VLT"};
  for (Index j = 0; j < c.k_y; ++j) d.inputs.observed_names.push_back("y" + std::to_string(j + 1));

  using namespace std::chrono;
  const sys_days start = sys_days{year{2020} / January / 6};
  for (Index t = 0; t < c.T; ++t) d.dates.emplace_back(start + weeks{t});

  // Monthly proxies: monthly means of g first, then independent AR(0.5) noise.
  const panel::MonthlySeries gm = panel::aggregate_to_months(d.g, d.dates);
  d.months = gm.months;
  const Index m = static_cast<Index>(d.months.size());
  d.proxies.resize(m, c.k_g + c.noise_proxies);
  d.proxies.leftCols(c.k_g) = gm.values;
  const double scale = std::sqrt(1.0 - 0.25);
  for (Index j = 0; j < c.noise_proxies; ++j) {
    double prev = normal(rng);
    for (Index t = 0; t < m; ++t) {
      prev = t == 0 ? prev : 0.5 * prev + scale * normal(rng);
      d.proxies(t, c.k_g + j) = prev;
    }
  }
  for (Index j = 0; j < c.k_g; ++j) d.proxy_names.push_back("g" + std::to_string(j + 1));
  for (Index j = 0; j < c.noise_proxies; ++j) d.proxy_names.push_back("p" + std::to_string(j + 1));
  return d;
}

ModelDraw generate_model(const ModelConfig& config) {
  Rng rng = substream(config.seed, 0, 0);
  return generate_model(config, rng);
}

pipeline::EstimateInputs estimate_inputs(const ModelDraw& d) {
  pipeline::EstimateInputs in;
  const Index n = d.inputs.units_count();
  in.panel.unit_ids = d.inputs.units;
  in.panel.time_index = d.dates;
  in.panel.outcome = d.inputs.outcome;
  in.panel.covariate_names = {"ILQ", "VLT", "VLM"};
  for (Index i = 0; i < n; ++i) {
    const auto& x = d.inputs.regressors[static_cast<std::size_t>(i)];
    const auto& z = d.inputs.semi[static_cast<std::size_t>(i)];
    Matrix c(x.rows(), 3);
    c << x.col(0), x.col(1), z.col(0);
    in.panel.covariates.push_back(std::move(c));
    in.groups.schemes["half"][d.inputs.units[static_cast<std::size_t>(i)]] = i < n / 2 ? "A" : "B";
  }
  in.factors.time_index = d.dates;
  in.factors.values = d.inputs.observed;
  in.factors.names = d.inputs.observed_names;
  in.proxies.months = d.months;
  in.proxies.pool.matrix = d.proxies;
  in.proxies.pool.names = d.proxy_names;
  return in;
}

}  // namespace dcp::mc
