#pragma once

#include "dcpanel/linalg.hpp"

#include <chrono>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dcp::panel {

using Date = std::chrono::year_month_day;
using Month = std::chrono::year_month;

/// Parses YYYY-MM-DD (or YYYY-MM for monthly labels, day set to 1).
Date parse_date(std::string_view text);
Month parse_month(std::string_view text);
std::string format_date(Date d);
std::string format_month(Month m);

/// Balanced N x T panel: outcome plus per-unit T x K covariates.
struct PanelDataset {
  std::vector<std::string> unit_ids;
  std::vector<Date> time_index;
  Matrix outcome;                     // N x T
  std::vector<Matrix> covariates;     // N entries, each T x K
  std::vector<std::string> covariate_names;

  Index units() const { return static_cast<Index>(unit_ids.size()); }
  Index periods() const { return static_cast<Index>(time_index.size()); }
  Index index_of(std::string_view covariate) const;
  /// Stacks the named covariate columns of one unit into a T x k matrix.
  Matrix select(Index unit, const std::vector<std::string>& names) const;

  /// Throws on any broken invariant (shape, order, finiteness, N >= 2).
  void validate() const;
};

struct ObservedFactors {
  std::vector<Date> time_index;
  Matrix values;  // T x K_y
  std::vector<std::string> names;

  void validate(const std::vector<Date>& panel_index) const;
};

/// scheme -> (unit -> label)
struct GroupMap {
  std::map<std::string, std::map<std::string, std::string>> schemes;

  void validate(const std::vector<std::string>& unit_ids) const;
  /// Distinct labels of a scheme, sorted.
  std::vector<std::string> labels(const std::string& scheme) const;
};

struct SemiEndogenousSet {
  std::vector<Matrix> values;  // N entries, each T x K_z
  std::vector<std::string> names;

  Index units() const { return static_cast<Index>(values.size()); }
};

/// Series shifted down by tau periods; the first tau rows are NaN.
struct LaggedSeries {
  Matrix values;
  Index available_from = 0;
};

LaggedSeries lag(const Matrix& series, Index tau);

/// Rows [start, T) of every aligned object: one period per autoregressive lag
/// plus zeta periods for lagged instruments.
struct EffectiveSample {
  Index total = 0;
  Index start = 0;

  Index length() const { return total - start; }
};

EffectiveSample trim_common(Index total, Index zeta, Index ar_lags = 0, Index k_x = 0, Index k_y = 0);
Matrix trim(const Matrix& series, const EffectiveSample& sample);
Vector trim(const Vector& series, const EffectiveSample& sample);
/// Rows [start - tau, T - tau): the tau-lagged series restricted to the sample.
Matrix lagged_rows(const Matrix& series, const EffectiveSample& sample, Index tau);

enum class Aggregation { Mean, Median };

struct MonthlyOptions {
  Aggregation method = Aggregation::Mean;
  /// Leading/trailing months with fewer member weeks are dropped.
  Index min_boundary_weeks = 1;
};

struct MonthlySeries {
  std::vector<Month> months;
  Matrix values;  // months x columns
};

/// Assigns each week to the calendar month of its period-start date and
/// aggregates each column within months.
MonthlySeries aggregate_to_months(const Matrix& weekly, const std::vector<Date>& dates,
                                  const MonthlyOptions& options = {});

}  // namespace dcp::panel
