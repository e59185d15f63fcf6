#include "dcpanel/features.hpp"

#include "dcpanel/error.hpp"

#include <algorithm>
#include <cmath>

namespace dcp::features {

void validate_bar(const Ohlcv& bar) {
  if (!(bar.open > 0.0 && bar.high > 0.0 && bar.low > 0.0 && bar.close > 0.0)) {
    fail(ErrorCode::NonPositivePrice, "prices must be strictly positive");
  }
  if (!(bar.volume >= 0.0)) fail(ErrorCode::InvalidInput, "volume must be non-negative");
  const double lo = std::min(bar.open, bar.close);
  const double hi = std::max(bar.open, bar.close);
  if (!(bar.low <= lo && hi <= bar.high)) {
    fail(ErrorCode::InvalidInput, "inconsistent bar: need low <= open,close <= high");
  }
}

std::vector<double> log_returns(std::span<const double> close) {
  if (close.size() < 2) fail(ErrorCode::InvalidInput, "log returns need at least 2 prices");
  std::vector<double> out;
  out.reserve(close.size() - 1);
  for (std::size_t t = 0; t < close.size(); ++t) {
    if (!(close[t] > 0.0)) fail(ErrorCode::NonPositivePrice, "price " + std::to_string(t) + " is not positive");
    if (t > 0) out.push_back(std::log(close[t]) - std::log(close[t - 1]));
  }
  return out;
}

GarmanKlassResult garman_klass(std::span<const Ohlcv> bars) {
  static const double k = 2.0 * std::log(2.0) - 1.0;
  GarmanKlassResult out;
  out.volatility.reserve(bars.size());
  for (const Ohlcv& bar : bars) {
    validate_bar(bar);
    const double hl = std::log(bar.high / bar.low);
    const double co = std::log(bar.close / bar.open);
    double v = 0.5 * hl * hl - k * co * co;
    if (v < 0.0) {
      v = 0.0;
      ++out.clamped;
    }
    out.volatility.push_back(v);
  }
  return out;
}

std::vector<double> amihud(std::span<const double> abs_returns, std::span<const double> volumes,
                           const AmihudOptions& options) {
  if (abs_returns.size() != volumes.size()) fail(ErrorCode::DimensionMismatch, "returns and volumes differ in length");
  const std::size_t d = options.days_per_week;
  if (d == 0 || abs_returns.size() % d != 0) {
    fail(ErrorCode::InvalidInput, "daily series must cover whole weeks of " + std::to_string(d) + " days");
  }
  std::vector<double> out;
  out.reserve(abs_returns.size() / d);
  for (std::size_t w = 0; w < abs_returns.size(); w += d) {
    double sum = 0.0;
    for (std::size_t j = w; j < w + d; ++j) {
      const double r = std::abs(abs_returns[j]);
      if (r == 0.0) continue;
      if (!(volumes[j] > 0.0)) {
        fail(ErrorCode::ZeroVolumeWithMove, "day " + std::to_string(j) + " moved with zero volume");
      }
      sum += r / volumes[j];
    }
    out.push_back(options.scale * sum / options.divisor);
  }
  return out;
}

Vector capweighted_market_vol(const Matrix& volatility, const Matrix& caps) {
  if (volatility.rows() != caps.rows() || volatility.cols() != caps.cols()) {
    fail(ErrorCode::DimensionMismatch, "volatility and caps must both be N x T");
  }
  if ((caps.array() < 0.0).any()) fail(ErrorCode::InvalidInput, "market caps must be non-negative");
  Vector out(volatility.cols());
  for (Index t = 0; t < volatility.cols(); ++t) {
    const double total = caps.col(t).sum();
    if (!(total > 0.0)) fail(ErrorCode::AllZeroCaps, "all caps are zero in period " + std::to_string(t));
    out(t) = caps.col(t).dot(volatility.col(t)) / total;
  }
  return out;
}

}  // namespace dcp::features
