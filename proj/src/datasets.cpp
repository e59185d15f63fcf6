#include "dcpanel/datasets.hpp"

#include "dcpanel/csv.hpp"
#include "dcpanel/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace dcp::io {
namespace {

std::string where(const CsvTable& t, std::size_t row) { return fmt::format("{}:{}", t.source, t.lines.at(row)); }

panel::Date cell_date(const CsvTable& t, std::size_t row, std::size_t col) {
  try {
    return panel::parse_date(t.rows[row][col]);
  } catch (const Error& e) {
    fail(e.code(), where(t, row) + ": " + e.what());
  }
}

panel::Month cell_month(const CsvTable& t, std::size_t row, std::size_t col) {
  try {
    return panel::parse_month(t.rows[row][col]);
  } catch (const Error& e) {
    fail(e.code(), where(t, row) + ": " + e.what());
  }
}

void require_rows(const CsvTable& t) {
  if (t.rows.empty()) fail(ErrorCode::InvalidInput, t.source + ": no data rows");
}

}  // namespace

panel::PanelDataset read_panel(const std::filesystem::path& path, const std::string& outcome) {
  const CsvTable t = read_csv(path);
  require_rows(t);
  const std::size_t c_unit = t.column("unit");
  const std::size_t c_date = t.column("date");
  std::string out_name = outcome;
  if (out_name.empty()) out_name = t.has_column("outcome") ? "outcome" : "r";
  const std::size_t c_out = t.column(out_name);

  panel::PanelDataset p;
  std::vector<std::size_t> cov_cols;
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (j == c_unit || j == c_date || j == c_out) continue;
    cov_cols.push_back(j);
    p.covariate_names.push_back(t.header[j]);
  }

  std::map<std::string, std::size_t> unit_pos;
  std::set<panel::Date> dates;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string& id = t.rows[r][c_unit];
    if (id.empty()) fail(ErrorCode::InvalidInput, where(t, r) + ": empty unit id");
    if (unit_pos.emplace(id, p.unit_ids.size()).second) p.unit_ids.push_back(id);
    dates.insert(cell_date(t, r, c_date));
  }
  p.time_index.assign(dates.begin(), dates.end());
  std::map<panel::Date, Index> date_pos;
  for (std::size_t s = 0; s < p.time_index.size(); ++s) date_pos[p.time_index[s]] = static_cast<Index>(s);

  const Index n = p.units(), tt = p.periods(), k = static_cast<Index>(cov_cols.size());
  p.outcome = Matrix::Constant(n, tt, std::nan(""));
  p.covariates.assign(static_cast<std::size_t>(n), Matrix::Constant(tt, k, std::nan("")));
  std::vector<std::vector<char>> seen(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(tt), 0));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::size_t i = unit_pos.at(t.rows[r][c_unit]);
    const Index s = date_pos.at(cell_date(t, r, c_date));
    if (seen[i][static_cast<std::size_t>(s)]) {
      fail(ErrorCode::InvalidInput, fmt::format("{}: duplicate row for unit '{}' on {}", where(t, r), p.unit_ids[i],
                                                t.rows[r][c_date]));
    }
    seen[i][static_cast<std::size_t>(s)] = 1;
    p.outcome(static_cast<Index>(i), s) = t.number(r, c_out);
    for (Index j = 0; j < k; ++j) p.covariates[i](s, j) = t.number(r, cov_cols[static_cast<std::size_t>(j)]);
  }
  for (Index i = 0; i < n; ++i) {
    for (Index s = 0; s < tt; ++s) {
      if (!seen[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)]) {
        fail(ErrorCode::InvalidInput, fmt::format("{}: unbalanced panel: unit '{}' has no row for {}", t.source,
                                                  p.unit_ids[static_cast<std::size_t>(i)],
                                                  panel::format_date(p.time_index[static_cast<std::size_t>(s)])));
      }
    }
  }
  p.validate();
  return p;
}

void write_panel(const panel::PanelDataset& p, const std::filesystem::path& path, const std::string& outcome) {
  CsvWriter out(path);
  std::vector<std::string> header{"unit", "date", outcome};
  header.insert(header.end(), p.covariate_names.begin(), p.covariate_names.end());
  out.row(header);
  for (Index i = 0; i < p.units(); ++i) {
    for (Index s = 0; s < p.periods(); ++s) {
      std::vector<std::string> row{p.unit_ids[static_cast<std::size_t>(i)],
                                   panel::format_date(p.time_index[static_cast<std::size_t>(s)]),
                                   format_number(p.outcome(i, s))};
      const Matrix& c = p.covariates[static_cast<std::size_t>(i)];
      for (Index j = 0; j < c.cols(); ++j) row.push_back(format_number(c(s, j)));
      out.row(row);
    }
  }
}

panel::ObservedFactors read_factors(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  require_rows(t);
  const std::size_t c_date = t.column("date");
  panel::ObservedFactors f;
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (j == c_date) continue;
    cols.push_back(j);
    f.names.push_back(t.header[j]);
  }
  std::vector<std::pair<panel::Date, std::size_t>> order;
  for (std::size_t r = 0; r < t.rows.size(); ++r) order.emplace_back(cell_date(t, r, c_date), r);
  std::sort(order.begin(), order.end());
  f.values.resize(static_cast<Index>(order.size()), static_cast<Index>(cols.size()));
  for (std::size_t s = 0; s < order.size(); ++s) {
    if (s > 0 && order[s].first == order[s - 1].first) {
      fail(ErrorCode::InvalidInput, where(t, order[s].second) + ": duplicate date " + t.rows[order[s].second][c_date]);
    }
    f.time_index.push_back(order[s].first);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      f.values(static_cast<Index>(s), static_cast<Index>(j)) = t.number(order[s].second, cols[j]);
    }
  }
  return f;
}

void write_factors(const panel::ObservedFactors& f, const std::filesystem::path& path) {
  CsvWriter out(path);
  std::vector<std::string> header{"date"};
  header.insert(header.end(), f.names.begin(), f.names.end());
  out.row(header);
  for (Index s = 0; s < f.values.rows(); ++s) {
    std::vector<std::string> row{panel::format_date(f.time_index[static_cast<std::size_t>(s)])};
    for (Index j = 0; j < f.values.cols(); ++j) row.push_back(format_number(f.values(s, j)));
    out.row(row);
  }
}

panel::GroupMap read_groups(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t c_unit = t.column("unit"), c_scheme = t.column("scheme"), c_label = t.column("label");
  panel::GroupMap g;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    if (row[c_unit].empty() || row[c_scheme].empty() || row[c_label].empty()) {
      fail(ErrorCode::InvalidInput, where(t, r) + ": empty unit, scheme or label");
    }
    if (!g.schemes[row[c_scheme]].emplace(row[c_unit], row[c_label]).second) {
      fail(ErrorCode::InvalidInput,
           fmt::format("{}: unit '{}' labelled twice in scheme '{}'", where(t, r), row[c_unit], row[c_scheme]));
    }
  }
  return g;
}

void write_groups(const panel::GroupMap& g, const std::filesystem::path& path) {
  CsvWriter out(path);
  out.row({"unit", "scheme", "label"});
  for (const auto& [scheme, assignment] : g.schemes) {
    for (const auto& [unit, label] : assignment) out.row({unit, scheme, label});
  }
}

ProxyTable read_proxies(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  require_rows(t);
  const std::size_t c_month = t.column("month");
  std::vector<std::size_t> cols;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (j == c_month) continue;
    cols.push_back(j);
    names.push_back(t.header[j]);
  }
  std::vector<std::pair<panel::Month, std::size_t>> order;
  for (std::size_t r = 0; r < t.rows.size(); ++r) order.emplace_back(cell_month(t, r, c_month), r);
  std::sort(order.begin(), order.end());
  ProxyTable p;
  Matrix m(static_cast<Index>(order.size()), static_cast<Index>(cols.size()));
  for (std::size_t s = 0; s < order.size(); ++s) {
    if (s > 0 && order[s].first == order[s - 1].first) {
      fail(ErrorCode::InvalidInput, where(t, order[s].second) + ": duplicate month " + t.rows[order[s].second][c_month]);
    }
    p.months.push_back(order[s].first);
    for (std::size_t j = 0; j < cols.size(); ++j) m(static_cast<Index>(s), static_cast<Index>(j)) = t.number(order[s].second, cols[j]);
  }
  p.pool.matrix = std::move(m);
  p.pool.names = std::move(names);
  return p;
}

void write_proxies(const ProxyTable& p, const std::filesystem::path& path) {
  CsvWriter out(path);
  std::vector<std::string> header{"month"};
  header.insert(header.end(), p.pool.names.begin(), p.pool.names.end());
  out.row(header);
  for (Index s = 0; s < p.pool.matrix.rows(); ++s) {
    std::vector<std::string> row{panel::format_month(p.months[static_cast<std::size_t>(s)])};
    for (Index j = 0; j < p.pool.matrix.cols(); ++j) row.push_back(format_number(p.pool.matrix(s, j)));
    out.row(row);
  }
}

std::vector<RawSeries> read_ohlcv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  require_rows(t);
  const std::size_t c_unit = t.column("unit"), c_date = t.column("date"), c_open = t.column("open"),
                    c_high = t.column("high"), c_low = t.column("low"), c_close = t.column("close"),
                    c_vol = t.column("volume");
  const bool caps = t.has_column("market_cap");
  const std::size_t c_cap = caps ? t.column("market_cap") : 0;
  std::vector<RawSeries> out;
  std::map<std::string, std::size_t> pos;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string& id = t.rows[r][c_unit];
    if (id.empty()) fail(ErrorCode::InvalidInput, where(t, r) + ": empty unit id");
    auto [it, fresh] = pos.emplace(id, out.size());
    if (fresh) out.push_back(RawSeries{id, {}, {}, {}});
    RawSeries& s = out[it->second];
    const panel::Date d = cell_date(t, r, c_date);
    if (!s.dates.empty() && !(s.dates.back() < d)) {
      fail(ErrorCode::InvalidInput, fmt::format("{}: dates of unit '{}' are not increasing", where(t, r), id));
    }
    features::Ohlcv bar{t.number(r, c_open), t.number(r, c_high), t.number(r, c_low), t.number(r, c_close),
                        t.number(r, c_vol)};
    try {
      features::validate_bar(bar);
    } catch (const Error& e) {
      fail(e.code(), where(t, r) + ": " + e.what());
    }
    s.dates.push_back(d);
    s.bars.push_back(bar);
    if (caps) {
      const double cap = t.number(r, c_cap);
      if (!(cap >= 0.0)) fail(ErrorCode::InvalidInput, where(t, r) + ": market_cap must be non-negative");
      s.caps.push_back(cap);
    }
  }
  return out;
}

}  // namespace dcp::io
