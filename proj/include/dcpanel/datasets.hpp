#pragma once

// Readers and writers for the on-disk panel, factor, group, proxy and raw
// price formats. Errors name the file and line.

#include "dcpanel/features.hpp"
#include "dcpanel/panel.hpp"
#include "dcpanel/selection.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace dcp::io {

/// Long format `unit,date,<outcome>,<covariate...>`. Units keep first-appearance
/// order, dates are sorted. An empty `outcome` picks `outcome`, else `r`.
panel::PanelDataset read_panel(const std::filesystem::path& path, const std::string& outcome = "");
void write_panel(const panel::PanelDataset& panel, const std::filesystem::path& path,
                 const std::string& outcome = "outcome");

/// Wide format `date,<factor...>`.
panel::ObservedFactors read_factors(const std::filesystem::path& path);
void write_factors(const panel::ObservedFactors& factors, const std::filesystem::path& path);

/// `unit,scheme,label`.
panel::GroupMap read_groups(const std::filesystem::path& path);
void write_groups(const panel::GroupMap& groups, const std::filesystem::path& path);

struct ProxyTable {
  std::vector<panel::Month> months;
  selection::CandidatePool pool;
};

/// Wide monthly format `month,<proxy...>`.
ProxyTable read_proxies(const std::filesystem::path& path);
void write_proxies(const ProxyTable& proxies, const std::filesystem::path& path);

struct RawSeries {
  std::string unit;
  std::vector<panel::Date> dates;
  std::vector<features::Ohlcv> bars;
  std::vector<double> caps;   // empty without a market_cap column
};

/// `unit,date,open,high,low,close,volume[,market_cap]`; bars are validated and
/// each unit's rows must be in increasing date order.
std::vector<RawSeries> read_ohlcv(const std::filesystem::path& path);

}  // namespace dcp::io
