#include "dcpanel/panel.hpp"

#include "dcpanel/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

namespace dcp::panel {
namespace {

int parse_int(std::string_view s, std::string_view what, std::string_view full) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    fail(ErrorCode::InvalidInput, "bad " + std::string(what) + " in date '" + std::string(full) + "'");
  }
  return v;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

Date parse_date(std::string_view text) {
  if (text.size() == 7) {
    const Month m = parse_month(text);
    return Date{m.year(), m.month(), std::chrono::day{1}};
  }
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    fail(ErrorCode::InvalidInput, "expected ISO-8601 date YYYY-MM-DD, got '" + std::string(text) + "'");
  }
  const Date d{std::chrono::year{parse_int(text.substr(0, 4), "year", text)},
               std::chrono::month{static_cast<unsigned>(parse_int(text.substr(5, 2), "month", text))},
               std::chrono::day{static_cast<unsigned>(parse_int(text.substr(8, 2), "day", text))}};
  if (!d.ok()) fail(ErrorCode::InvalidInput, "invalid calendar date '" + std::string(text) + "'");
  return d;
}

Month parse_month(std::string_view text) {
  if (text.size() == 10) {
    const Date d = parse_date(text);
    return Month{d.year(), d.month()};
  }
  if (text.size() != 7 || text[4] != '-') {
    fail(ErrorCode::InvalidInput, "expected YYYY-MM month, got '" + std::string(text) + "'");
  }
  const Month m{std::chrono::year{parse_int(text.substr(0, 4), "year", text)},
                std::chrono::month{static_cast<unsigned>(parse_int(text.substr(5, 2), "month", text))}};
  if (!m.ok()) fail(ErrorCode::InvalidInput, "invalid month '" + std::string(text) + "'");
  return m;
}

std::string format_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

std::string format_month(Month m) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u", static_cast<int>(m.year()), static_cast<unsigned>(m.month()));
  return buf;
}

Index PanelDataset::index_of(std::string_view covariate) const {
  const auto it = std::find(covariate_names.begin(), covariate_names.end(), covariate);
  if (it == covariate_names.end()) {
    fail(ErrorCode::InvalidConfig, "unknown covariate '" + std::string(covariate) + "'");
  }
  return static_cast<Index>(it - covariate_names.begin());
}

Matrix PanelDataset::select(Index unit, const std::vector<std::string>& names) const {
  Matrix out(periods(), static_cast<Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    out.col(static_cast<Index>(j)) = covariates[static_cast<std::size_t>(unit)].col(index_of(names[j]));
  }
  return out;
}

void PanelDataset::validate() const {
  const Index n = units();
  const Index t = periods();
  if (n < 2) fail(ErrorCode::InvalidInput, "panel needs at least 2 units, got " + std::to_string(n));
  if (outcome.rows() != n || outcome.cols() != t) {
    fail(ErrorCode::DimensionMismatch, "outcome must be N x T");
  }
  if (static_cast<Index>(covariates.size()) != n) {
    fail(ErrorCode::DimensionMismatch, "one covariate block per unit required");
  }
  const Index k = static_cast<Index>(covariate_names.size());
  if (t < k + 2) {
    fail(ErrorCode::SampleTooShort, "T=" + std::to_string(t) + " < K_x + 2 = " + std::to_string(k + 2));
  }
  for (Index s = 1; s < t; ++s) {
    if (!(time_index[s - 1] < time_index[s])) {
      fail(ErrorCode::InvalidInput, "time index not strictly increasing at " + format_date(time_index[s]));
    }
  }
  std::set<std::string> seen;
  for (Index i = 0; i < n; ++i) {
    const auto& id = unit_ids[static_cast<std::size_t>(i)];
    if (!seen.insert(id).second) fail(ErrorCode::InvalidInput, "duplicate unit '" + id + "'");
    const Matrix& c = covariates[static_cast<std::size_t>(i)];
    if (c.rows() != t || c.cols() != k) {
      fail(ErrorCode::DimensionMismatch, "covariates of unit '" + id + "' are not T x K");
    }
    if (!c.allFinite() || !outcome.row(i).allFinite()) {
      fail(ErrorCode::InvalidInput, "unit '" + id + "' has missing or non-finite entries");
    }
  }
}

void ObservedFactors::validate(const std::vector<Date>& panel_index) const {
  if (time_index != panel_index) {
    fail(ErrorCode::DimensionMismatch, "observed factors are not aligned with the panel calendar");
  }
  if (values.rows() != static_cast<Index>(time_index.size()) ||
      values.cols() != static_cast<Index>(names.size())) {
    fail(ErrorCode::DimensionMismatch, "observed factor matrix must be T x K_y");
  }
  if (!values.allFinite()) fail(ErrorCode::InvalidInput, "observed factors contain non-finite entries");
}

void GroupMap::validate(const std::vector<std::string>& unit_ids) const {
  for (const auto& [scheme, assignment] : schemes) {
    for (const auto& id : unit_ids) {
      if (!assignment.count(id)) {
        fail(ErrorCode::InvalidInput, "unit '" + id + "' has no label in scheme '" + scheme + "'");
      }
    }
    for (const auto& [id, label] : assignment) {
      if (std::find(unit_ids.begin(), unit_ids.end(), id) == unit_ids.end()) {
        fail(ErrorCode::InvalidInput, "scheme '" + scheme + "' labels unknown unit '" + id + "'");
      }
    }
  }
}

std::vector<std::string> GroupMap::labels(const std::string& scheme) const {
  std::set<std::string> out;
  const auto it = schemes.find(scheme);
  if (it != schemes.end()) {
    for (const auto& [id, label] : it->second) out.insert(label);
  }
  return {out.begin(), out.end()};
}

LaggedSeries lag(const Matrix& series, Index tau) {
  const Index t = series.rows();
  if (tau < 0 || tau >= t) {
    fail(ErrorCode::TauTooLarge, "lag " + std::to_string(tau) + " needs tau < T=" + std::to_string(t));
  }
  LaggedSeries out;
  out.available_from = tau;
  out.values = Matrix::Constant(t, series.cols(), std::numeric_limits<double>::quiet_NaN());
  out.values.bottomRows(t - tau) = series.topRows(t - tau);
  return out;
}

EffectiveSample trim_common(Index total, Index zeta, Index ar_lags, Index k_x, Index k_y) {
  if (zeta < 0 || ar_lags < 0) fail(ErrorCode::InvalidConfig, "lags must be non-negative");
  if (zeta >= total - k_x - k_y || zeta + ar_lags >= total) {
    fail(ErrorCode::SampleTooShort, "zeta=" + std::to_string(zeta) + " leaves no usable sample of T=" +
                                        std::to_string(total));
  }
  return EffectiveSample{total, zeta + ar_lags};
}

Matrix trim(const Matrix& series, const EffectiveSample& sample) {
  if (series.rows() != sample.total) fail(ErrorCode::DimensionMismatch, "series length differs from T");
  return series.bottomRows(sample.length());
}

Vector trim(const Vector& series, const EffectiveSample& sample) {
  if (series.size() != sample.total) fail(ErrorCode::DimensionMismatch, "series length differs from T");
  return series.tail(sample.length());
}

Matrix lagged_rows(const Matrix& series, const EffectiveSample& sample, Index tau) {
  if (series.rows() != sample.total) fail(ErrorCode::DimensionMismatch, "series length differs from T");
  if (tau < 0 || tau > sample.start) {
    fail(ErrorCode::TauTooLarge, "lag " + std::to_string(tau) + " reaches before the first period");
  }
  return series.middleRows(sample.start - tau, sample.length());
}

MonthlySeries aggregate_to_months(const Matrix& weekly, const std::vector<Date>& dates,
                                  const MonthlyOptions& options) {
  if (static_cast<Index>(dates.size()) != weekly.rows()) {
    fail(ErrorCode::DimensionMismatch, "one date per weekly observation required");
  }
  if (dates.empty()) fail(ErrorCode::InvalidInput, "no observations to aggregate");

  // Consecutive runs of equal months; dates are assumed chronological.
  std::vector<Month> months;
  std::vector<std::vector<Index>> members;
  for (std::size_t s = 0; s < dates.size(); ++s) {
    const Month m{dates[s].year(), dates[s].month()};
    if (s > 0 && !(dates[s - 1] < dates[s])) {
      fail(ErrorCode::InvalidInput, "weekly dates must be strictly increasing");
    }
    if (months.empty() || months.back() != m) {
      if (!months.empty() && months.back() + std::chrono::months{1} != m) {
        fail(ErrorCode::EmptyMonth, "no weeks fall in the month after " + format_month(months.back()));
      }
      months.push_back(m);
      members.emplace_back();
    }
    members.back().push_back(static_cast<Index>(s));
  }

  std::size_t first = 0;
  std::size_t last = months.size();
  const auto min_weeks = static_cast<std::size_t>(std::max<Index>(options.min_boundary_weeks, 1));
  if (members.size() > 1 && members.front().size() < min_weeks) ++first;
  if (last - first > 1 && members[last - 1].size() < min_weeks) --last;

  MonthlySeries out;
  out.months.assign(months.begin() + static_cast<std::ptrdiff_t>(first),
                    months.begin() + static_cast<std::ptrdiff_t>(last));
  out.values.resize(static_cast<Index>(last - first), weekly.cols());
  for (std::size_t m = first; m < last; ++m) {
    const auto& rows = members[m];
    for (Index c = 0; c < weekly.cols(); ++c) {
      double v;
      if (options.method == Aggregation::Mean) {
        double sum = 0.0;
        for (Index r : rows) sum += weekly(r, c);
        v = sum / static_cast<double>(rows.size());
      } else {
        std::vector<double> buf;
        buf.reserve(rows.size());
        for (Index r : rows) buf.push_back(weekly(r, c));
        v = median_of(std::move(buf));
      }
      out.values(static_cast<Index>(m - first), c) = v;
    }
  }
  return out;
}

}  // namespace dcp::panel
