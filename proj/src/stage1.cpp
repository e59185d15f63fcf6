#include "dcpanel/stage1.hpp"

#include "dcpanel/error.hpp"
#include "dcpanel/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dcp::stage1 {
namespace {

constexpr double kMaxCondition = 1e12;
constexpr double kJitterCondition = 1e8;

Matrix stack_observed_basis(const Matrix& observed_eff, bool intercept) {
  Matrix basis(observed_eff.rows(), observed_eff.cols() + (intercept ? 1 : 0));
  basis.leftCols(observed_eff.cols()) = observed_eff;
  if (intercept) basis.col(basis.cols() - 1).setOnes();
  return basis;
}

Matrix project(const linalg::Projector* p, const Matrix& x) { return p ? p->apply(x) : x; }
Vector project(const linalg::Projector* p, const Vector& x) { return p ? p->apply(x) : x; }

struct Moments {
  Matrix mz;  // M_F Z_hat
  Matrix a;
  Matrix b;
  Vector c;
};

Moments moments(const Vector& outcome, const Matrix& regressors, const InstrumentMatrix& instruments,
                const linalg::Projector* defactor) {
  const Index t = regressors.rows();
  if (outcome.size() != t || instruments.values.rows() != t) {
    fail(ErrorCode::DimensionMismatch, "outcome, regressors and instruments must share the sample");
  }
  const double inv_t = 1.0 / static_cast<double>(t);
  Moments m;
  m.mz = project(defactor, instruments.values);
  m.a = m.mz.transpose() * regressors * inv_t;
  m.b = m.mz.transpose() * m.mz * inv_t;
  m.c = m.mz.transpose() * outcome * inv_t;
  return m;
}

}  // namespace

Defactored defactor_regressors(const std::vector<Matrix>& semi, const Matrix& observed,
                               const panel::EffectiveSample& sample, Index zeta,
                               std::optional<Index> k_f, Index k_max, bool intercept) {
  const Index n = static_cast<Index>(semi.size());
  if (n < 2) fail(ErrorCode::InvalidInput, "defactoring needs at least 2 units");
  if (zeta < 0 || zeta > sample.start) fail(ErrorCode::InvalidConfig, "zeta exceeds the trimmed periods");
  const Index t_eff = sample.length();
  const Index k_z = semi.front().cols();

  const Matrix observed_eff = panel::lagged_rows(observed, sample, 0);
  const Matrix basis = stack_observed_basis(observed_eff, intercept);
  std::optional<linalg::Projector> m_y;
  if (basis.cols() > 0) m_y = linalg::annihilator(basis);

  Defactored out;
  out.factors.reserve(static_cast<std::size_t>(zeta + 1));
  out.blocks.resize(static_cast<std::size_t>(zeta + 1));

  for (Index tau = 0; tau <= zeta; ++tau) {
    std::vector<Matrix> projected(static_cast<std::size_t>(n));
    Matrix stacked(n * k_z, t_eff);
    double energy = 0.0;
    for (Index i = 0; i < n; ++i) {
      const Matrix& zi = semi[static_cast<std::size_t>(i)];
      if (zi.cols() != k_z) fail(ErrorCode::DimensionMismatch, "semi-endogenous blocks differ in width");
      const Matrix lagged = panel::lagged_rows(zi, sample, tau);
      energy += lagged.squaredNorm();
      Matrix& p = projected[static_cast<std::size_t>(i)];
      p = m_y ? m_y->apply(lagged) : lagged;
      stacked.middleRows(i * k_z, k_z) = p.transpose();
    }
    const double denom = static_cast<double>(n) * static_cast<double>(t_eff);
    const Matrix cov = kernels::cross_product(stacked) / denom;
    if (!(cov.trace() > 1e-12 * std::max(energy / denom, 1e-300))) {
      fail(ErrorCode::FactorCountZero,
           "semi-endogenous regressors carry no variation beyond the observed factors (lag " +
               std::to_string(tau) + ")");
    }

    if (tau == 0) {
      if (k_f) {
        out.k_f = *k_f;
        if (out.k_f < 1) fail(ErrorCode::FactorCountZero, "k_f must be at least 1");
      } else {
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (cov + cov.transpose()), Eigen::EigenvaluesOnly);
        Vector spectrum = eig.eigenvalues().reverse().cwiseMax(0.0);
        const Index cap = std::min(k_max, t_eff - 2);
        if (cap < 1) fail(ErrorCode::SampleTooShort, "effective sample too short to count factors");
        out.k_f = linalg::eigenvalue_ratio_count(spectrum, cap);
      }
    }

    linalg::FactorEstimate f = linalg::extract_factors(cov, out.k_f);
    const linalg::Projector m_f = linalg::annihilator(f.factors);
    auto& blocks = out.blocks[static_cast<std::size_t>(tau)];
    blocks.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      blocks[static_cast<std::size_t>(i)] = m_f.apply(projected[static_cast<std::size_t>(i)]);
    }
    out.factors.push_back(std::move(f));
  }
  return out;
}

InstrumentMatrix build_instruments(const std::vector<Matrix>& unit_blocks, const Matrix& observed_eff,
                                   const Matrix& observed_lag_eff, bool intercept, Index k_regressors) {
  if (unit_blocks.empty()) fail(ErrorCode::InvalidInput, "no defactored blocks");
  const Index t = unit_blocks.front().rows();
  const Index k_z = unit_blocks.front().cols();
  const Index k_y = observed_eff.cols();
  if (observed_eff.rows() != t || observed_lag_eff.rows() != t || observed_lag_eff.cols() != k_y) {
    fail(ErrorCode::DimensionMismatch, "instrument blocks are not trimmed to a common sample");
  }
  InstrumentMatrix z;
  z.zeta = static_cast<Index>(unit_blocks.size()) - 1;
  z.k_z = k_z;
  z.k_y = k_y;
  z.intercept = intercept;

  const Index k_iv = k_z * (z.zeta + 1) + 2 * k_y + (intercept ? 1 : 0);
  if (k_iv < k_regressors) {
    fail(ErrorCode::OrderConditionViolated, std::to_string(k_iv) + " instruments for " +
                                                std::to_string(k_regressors) + " regressors");
  }
  z.values.resize(t, k_iv);
  Index col = 0;
  for (const Matrix& block : unit_blocks) {
    if (block.rows() != t || block.cols() != k_z) fail(ErrorCode::DimensionMismatch, "ragged instrument blocks");
    z.values.middleCols(col, k_z) = block;
    col += k_z;
  }
  z.values.middleCols(col, k_y) = observed_eff;
  col += k_y;
  z.values.middleCols(col, k_y) = observed_lag_eff;
  col += k_y;
  if (intercept) z.values.col(col).setOnes();
  return z;
}

UnitIVFit fit_unit_iv(const Vector& outcome, const Matrix& regressors, const InstrumentMatrix& instruments,
                      const linalg::Projector* defactor) {
  const Index t = regressors.rows();
  const Index k = regressors.cols();
  const Index k_iv = instruments.k_iv();
  if (k_iv < k) fail(ErrorCode::OrderConditionViolated, "fewer instruments than regressors");
  if (t <= k_iv) {
    fail(ErrorCode::SampleTooShort, "effective T=" + std::to_string(t) + " must exceed K_iv=" + std::to_string(k_iv));
  }

  Moments m = moments(outcome, regressors, instruments, defactor);
  UnitIVFit fit;

  const Eigen::SelfAdjointEigenSolver<Matrix> eig_b(m.b, Eigen::EigenvaluesOnly);
  const double lo = eig_b.eigenvalues()(0);
  const double hi = eig_b.eigenvalues()(k_iv - 1);
  fit.diagnostics.condition_b = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(fit.diagnostics.condition_b < kMaxCondition)) {
    fail(ErrorCode::SingularWeighting, "instrument second-moment matrix is singular (condition " +
                                           std::to_string(fit.diagnostics.condition_b) + ")");
  }
  if (fit.diagnostics.condition_b > kJitterCondition) {
    fit.diagnostics.jitter = 1e-10 * m.b.trace() / static_cast<double>(k_iv);
    m.b.diagonal().array() += fit.diagnostics.jitter;
  }
  const Eigen::LDLT<Matrix> b_ldlt(m.b);
  const Matrix w_a = b_ldlt.solve(m.a);  // B^{-1} A

  const Eigen::JacobiSVD<Matrix> svd_a(m.a);
  const Vector& sv = svd_a.singularValues();
  fit.diagnostics.min_singular_a = sv(k - 1);
  if (!(sv(0) > 0.0) || sv(k - 1) <= linalg::kRankTolerance * sv(0)) {
    fail(ErrorCode::RankDeficientA, "instruments do not identify all coefficients");
  }

  const Matrix h = m.a.transpose() * w_a;  // A' B^{-1} A
  const Eigen::LDLT<Matrix> h_ldlt(h);
  const Matrix h_inv = h_ldlt.solve(Matrix::Identity(k, k));
  fit.theta = h_inv * (w_a.transpose() * m.c);
  fit.residuals = outcome - regressors * fit.theta;

  const Vector u_tilde = project(defactor, fit.residuals);
  Matrix sigma = Matrix::Zero(k_iv, k_iv);
  for (Index s = 0; s < t; ++s) {
    const double u2 = u_tilde(s) * u_tilde(s);
    sigma.noalias() += u2 * m.mz.row(s).transpose() * m.mz.row(s);
  }
  sigma /= static_cast<double>(t);

  const Matrix bread = h_inv * w_a.transpose();  // (A'WA)^{-1} A'W
  Matrix cov = bread * sigma * bread.transpose() / static_cast<double>(t);
  fit.covariance = 0.5 * (cov + cov.transpose());
  fit.stderr = fit.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return fit;
}

double gmm_objective(const Vector& outcome, const Matrix& regressors, const InstrumentMatrix& instruments,
                     const linalg::Projector* defactor, const Vector& theta) {
  const Moments m = moments(outcome, regressors, instruments, defactor);
  const Vector g = m.c - m.a * theta;
  return g.dot(m.b.ldlt().solve(g));
}

Matrix Result::residual_matrix() const {
  Matrix out(static_cast<Index>(fits.size()), sample.length());
  for (std::size_t i = 0; i < fits.size(); ++i) out.row(static_cast<Index>(i)) = fits[i].residuals.transpose();
  return out;
}

Matrix Result::coefficient_matrix() const {
  const Index k = static_cast<Index>(param_names.size());
  Matrix out(static_cast<Index>(fits.size()), k);
  for (std::size_t i = 0; i < fits.size(); ++i) out.row(static_cast<Index>(i)) = fits[i].theta.transpose();
  return out;
}

Result run(const Inputs& in, const Config& config) {
  const Index n = in.units_count();
  const Index t = in.periods();
  if (n < 2) fail(ErrorCode::InvalidInput, "stage 1 needs at least 2 units, got " + std::to_string(n));
  if (static_cast<Index>(in.units.size()) != n || static_cast<Index>(in.regressors.size()) != n ||
      static_cast<Index>(in.semi.size()) != n) {
    fail(ErrorCode::DimensionMismatch, "per-unit inputs must all have N entries");
  }
  if (in.observed.rows() != t) fail(ErrorCode::DimensionMismatch, "observed factors must have T rows");
  if (config.ar_lags < 0 || config.ar_lags > 1) fail(ErrorCode::InvalidConfig, "ar_lags must be 0 or 1");
  if (config.zeta < 0) fail(ErrorCode::InvalidConfig, "zeta must be non-negative");

  const Index k_x = config.ar_lags + (n > 0 ? in.regressors.front().cols() : 0);
  const Index k_y = in.observed.cols();

  Result out;
  out.units = in.units;
  out.sample = panel::trim_common(t, config.zeta, config.ar_lags, k_x, k_y);
  if (k_y > 0 && out.sample.start < 1) {
    // Y_{-1} needs one pre-sample period.
    out.sample.start = 1;
  }

  if (config.ar_lags == 1) out.param_names.push_back("r_lag1");
  for (const auto& name : in.regressor_names) out.param_names.push_back(name);
  for (const auto& name : in.observed_names) out.param_names.push_back(name);
  if (config.intercept) out.param_names.push_back("const");
  const Index k = static_cast<Index>(out.param_names.size());

  Defactored defactored = defactor_regressors(in.semi, in.observed, out.sample, config.zeta, config.k_f,
                                              config.k_max, config.intercept);
  out.k_f = defactored.k_f;
  out.factors = defactored.factors.front();
  const linalg::Projector m_f = linalg::annihilator(out.factors.factors);

  const Matrix observed_eff = panel::lagged_rows(in.observed, out.sample, 0);
  const Matrix observed_lag = k_y > 0 ? panel::lagged_rows(in.observed, out.sample, 1)
                                      : Matrix(out.sample.length(), 0);
  const Index t_eff = out.sample.length();

  out.fits.resize(static_cast<std::size_t>(n));
  std::vector<std::string> errors(static_cast<std::size_t>(n));
  std::vector<int> codes(static_cast<std::size_t>(n), -1);

#pragma omp parallel for schedule(dynamic)
  for (Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    try {
      Matrix c(t_eff, k);
      Index col = 0;
      if (config.ar_lags == 1) {
        c.col(col++) = panel::lagged_rows(Matrix(in.outcome.row(i).transpose()), out.sample, 1);
      }
      const Matrix& xi = in.regressors[ui];
      if (xi.rows() != t) fail(ErrorCode::DimensionMismatch, "regressors must have T rows");
      c.middleCols(col, xi.cols()) = panel::lagged_rows(xi, out.sample, 0);
      col += xi.cols();
      c.middleCols(col, k_y) = observed_eff;
      col += k_y;
      if (config.intercept) c.col(col).setOnes();

      std::vector<Matrix> blocks;
      blocks.reserve(defactored.blocks.size());
      for (const auto& per_tau : defactored.blocks) blocks.push_back(per_tau[ui]);
      const InstrumentMatrix z = build_instruments(blocks, observed_eff, observed_lag, config.intercept, k);
      const Vector r = panel::lagged_rows(Matrix(in.outcome.row(i).transpose()), out.sample, 0).col(0);
      out.fits[ui] = fit_unit_iv(r, c, z, &m_f);
      if (i == 0) out.k_iv = z.k_iv();
    } catch (const Error& e) {
      errors[ui] = e.what();
      codes[ui] = static_cast<int>(e.code());
    }
  }

  std::string message;
  int first_code = -1;
  for (Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (codes[ui] < 0) continue;
    if (first_code < 0) first_code = codes[ui];
    message += (message.empty() ? "" : "; ") + in.units[ui] + ": " + errors[ui];
  }
  if (first_code >= 0) throw Error(static_cast<ErrorCode>(first_code), "unit fits failed: " + message);
  if (out.k_iv == 0) {
    out.k_iv = in.semi.front().cols() * (config.zeta + 1) + 2 * k_y + (config.intercept ? 1 : 0);
  }
  return out;
}

}  // namespace dcp::stage1
