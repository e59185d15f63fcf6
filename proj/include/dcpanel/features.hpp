#pragma once

#include "dcpanel/linalg.hpp"

#include <span>
#include <vector>

namespace dcp::features {

struct Ohlcv {
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
  double volume = 0.0;
};

/// Throws InvalidInput unless low <= min(open, close) <= max(open, close) <= high,
/// prices > 0 and volume >= 0.
void validate_bar(const Ohlcv& bar);

/// r_t = ln p_t - ln p_{t-1}; output has one fewer element.
std::vector<double> log_returns(std::span<const double> close);

struct GarmanKlassResult {
  std::vector<double> volatility;
  std::size_t clamped = 0;  // periods where the raw estimate was negative
};

/// 0.5 ln(h/l)^2 - (2 ln 2 - 1) ln(c/o)^2 per bar, clamped at zero.
GarmanKlassResult garman_klass(std::span<const Ohlcv> bars);

struct AmihudOptions {
  std::size_t days_per_week = 7;
  /// Averaging divisor; calendar days by default.
  double divisor = 7.0;
  double scale = 1e6;
};

/// Weekly 10^6 * (1/7) sum_d |r_d| / VLM_d over consecutive blocks of daily
/// observations. Zero-return days contribute zero whatever their volume.
std::vector<double> amihud(std::span<const double> abs_returns, std::span<const double> volumes,
                           const AmihudOptions& options = {});

/// sum_i w_it VLT_it with w_it = cap_it / sum_j cap_jt. Inputs are N x T.
Vector capweighted_market_vol(const Matrix& volatility, const Matrix& caps);

}  // namespace dcp::features
