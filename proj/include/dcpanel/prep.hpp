#pragma once

// Weekly unit features from daily OHLCV bars.

#include "dcpanel/datasets.hpp"
#include "dcpanel/features.hpp"

#include <optional>

namespace dcp::features {

/// One week from seven daily bars: first open, max high, min low, last close,
/// summed volume.
Ohlcv aggregate_bars(std::span<const Ohlcv> days);

struct FeatureTable {
  std::vector<std::string> units;
  std::vector<panel::Date> weeks;   // period-start dates
  Matrix r, vlt, ilq, vlm;          // N x W
  std::optional<Vector> cvlt;       // cap-weighted VLT when caps are present
  std::size_t clamped = 0;          // Garman-Klass values clamped at zero
};

/// Daily series must share one gap-free calendar. Weeks are consecutive
/// 7-day blocks from the first date (a trailing partial week is dropped); the
/// first week only seeds returns, so W = full weeks - 1.
FeatureTable prepare(const std::vector<io::RawSeries>& daily, const AmihudOptions& options = {});

/// `unit,date,r,VLT,ILQ,VLM`.
void write_features(const FeatureTable& table, const std::filesystem::path& path);

}  // namespace dcp::features
