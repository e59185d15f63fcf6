#include "dcpanel/prep.hpp"

#include "dcpanel/csv.hpp"
#include "dcpanel/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace dcp::features {

Ohlcv aggregate_bars(std::span<const Ohlcv> days) {
  if (days.empty()) fail(ErrorCode::InvalidInput, "cannot aggregate an empty week");
  Ohlcv w{days.front().open, days.front().high, days.front().low, days.back().close, 0.0};
  for (const Ohlcv& d : days) {
    w.high = std::max(w.high, d.high);
    w.low = std::min(w.low, d.low);
    w.volume += d.volume;
  }
  return w;
}

FeatureTable prepare(const std::vector<io::RawSeries>& daily, const AmihudOptions& options) {
  if (daily.size() < 2) fail(ErrorCode::InvalidInput, "feature preparation needs at least 2 units");
  const std::size_t span = options.days_per_week;
  const auto& calendar = daily.front().dates;
  for (std::size_t d = 1; d < calendar.size(); ++d) {
    using std::chrono::sys_days;
    if (sys_days{calendar[d]} - sys_days{calendar[d - 1]} != std::chrono::days{1}) {
      fail(ErrorCode::InvalidInput, "daily calendar of unit '" + daily.front().unit + "' has a gap before " +
                                        panel::format_date(calendar[d]));
    }
  }
  for (const auto& s : daily) {
    if (s.dates != calendar) {
      fail(ErrorCode::InvalidInput, "unit '" + s.unit + "' does not share the daily calendar of '" +
                                        daily.front().unit + "'");
    }
  }
  const bool caps = std::all_of(daily.begin(), daily.end(), [](const io::RawSeries& s) { return !s.caps.empty(); });
  const std::size_t full = calendar.size() / span;
  if (full < 3) fail(ErrorCode::SampleTooShort, "need at least 3 full weeks of daily data");
  const Index n = static_cast<Index>(daily.size());
  const Index w = static_cast<Index>(full - 1);

  FeatureTable out;
  out.r.resize(n, w);
  out.vlt.resize(n, w);
  out.ilq.resize(n, w);
  out.vlm.resize(n, w);
  Matrix cap(n, w);
  for (std::size_t k = 1; k < full; ++k) out.weeks.push_back(calendar[k * span]);

  for (Index i = 0; i < n; ++i) {
    const auto& s = daily[static_cast<std::size_t>(i)];
    out.units.push_back(s.unit);
    std::vector<Ohlcv> weekly;
    std::vector<double> closes;
    for (std::size_t k = 0; k < full; ++k) {
      weekly.push_back(aggregate_bars(std::span<const Ohlcv>(s.bars).subspan(k * span, span)));
      closes.push_back(weekly.back().close);
    }
    const std::vector<double> r = log_returns(closes);
    const GarmanKlassResult gk = garman_klass(std::span<const Ohlcv>(weekly).subspan(1));
    out.clamped += gk.clamped;

    // Close-to-close daily returns for the retained weeks.
    std::vector<double> abs_r, vol;
    for (std::size_t d = span; d < full * span; ++d) {
      abs_r.push_back(std::abs(std::log(s.bars[d].close) - std::log(s.bars[d - 1].close)));
      vol.push_back(s.bars[d].volume);
    }
    std::vector<double> ilq;
    try {
      ilq = amihud(abs_r, vol, options);
    } catch (const Error& e) {
      fail(e.code(), "unit '" + s.unit + "': " + e.what());
    }
    for (Index k = 0; k < w; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      out.r(i, k) = r[kk];
      out.vlt(i, k) = gk.volatility[kk];
      out.ilq(i, k) = ilq[kk];
      out.vlm(i, k) = weekly[kk + 1].volume;
      if (caps) cap(i, k) = s.caps[(kk + 2) * span - 1];
    }
  }
  if (caps) out.cvlt = capweighted_market_vol(out.vlt, cap);
  return out;
}

void write_features(const FeatureTable& t, const std::filesystem::path& path) {
  io::CsvWriter out(path);
  out.row({"unit", "date", "r", "VLT", "ILQ", "VLM"});
  for (Index i = 0; i < t.r.rows(); ++i) {
    for (Index k = 0; k < t.r.cols(); ++k) {
      out.row({t.units[static_cast<std::size_t>(i)], panel::format_date(t.weeks[static_cast<std::size_t>(k)]),
               io::format_number(t.r(i, k)), io::format_number(t.vlt(i, k)), io::format_number(t.ilq(i, k)),
               io::format_number(t.vlm(i, k))});
    }
  }
}

}  // namespace dcp::features
