#include "dcpanel/meangroup.hpp"

#include "dcpanel/csv.hpp"
#include "dcpanel/error.hpp"
#include "dcpanel/stats.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace dcp::meangroup {

MeanGroupResult mean_group(const Matrix& coefficients, std::vector<std::string> names, std::string group,
                           std::vector<std::string> units, Index periods_per_unit) {
  const Index n = coefficients.rows();
  const Index k = coefficients.cols();
  if (n < 2) fail(ErrorCode::GroupTooSmall, fmt::format("group '{}' has {} unit(s); need at least 2", group, n));
  if (!coefficients.allFinite()) fail(ErrorCode::InvalidInput, "per-unit coefficients contain non-finite values");
  if (names.empty()) {
    for (Index j = 0; j < k; ++j) names.push_back(fmt::format("b{}", j));
  }
  if (static_cast<Index>(names.size()) != k) fail(ErrorCode::DimensionMismatch, "coefficient names differ in count");
  if (!units.empty() && static_cast<Index>(units.size()) != n) {
    fail(ErrorCode::DimensionMismatch, "unit labels differ in count from coefficient rows");
  }

  MeanGroupResult out;
  out.group = std::move(group);
  out.units = std::move(units);
  out.names = std::move(names);
  out.n = n;
  out.nt = n * periods_per_unit;
  out.mean = coefficients.colwise().mean().transpose();
  const Matrix dev = coefficients.rowwise() - out.mean.transpose();
  out.sigma_eta = dev.transpose() * dev / static_cast<double>(n - 1);
  out.sigma_eta = 0.5 * (out.sigma_eta + out.sigma_eta.transpose()).eval();
  out.covariance = out.sigma_eta / static_cast<double>(n);
  out.stderr = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  out.z.resize(k);
  for (Index j = 0; j < k; ++j) {
    const double m = out.mean(j), s = out.stderr(j);
    out.z(j) = s > 0.0 ? m / s : (m == 0.0 ? 0.0 : std::copysign(INFINITY, m));
  }
  return out;
}

std::vector<MeanGroupResult> by_group(const Matrix& coefficients, const std::vector<std::string>& unit_ids,
                                      const std::vector<std::string>& names, const panel::GroupMap& groups,
                                      const std::string& scheme, Index periods_per_unit) {
  if (static_cast<Index>(unit_ids.size()) != coefficients.rows()) {
    fail(ErrorCode::DimensionMismatch, "unit ids differ in count from coefficient rows");
  }
  const auto it = groups.schemes.find(scheme);
  if (it == groups.schemes.end()) fail(ErrorCode::InvalidInput, fmt::format("unknown grouping scheme '{}'", scheme));
  std::vector<MeanGroupResult> out;
  for (const std::string& label : groups.labels(scheme)) {
    std::vector<Index> rows;
    std::vector<std::string> members;
    for (std::size_t i = 0; i < unit_ids.size(); ++i) {
      const auto m = it->second.find(unit_ids[i]);
      if (m != it->second.end() && m->second == label) {
        rows.push_back(static_cast<Index>(i));
        members.push_back(unit_ids[i]);
      }
    }
    Matrix sub(static_cast<Index>(rows.size()), coefficients.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) sub.row(static_cast<Index>(r)) = coefficients.row(rows[r]);
    out.push_back(mean_group(sub, names, label, std::move(members), periods_per_unit));
  }
  return out;
}

GroupDifference group_difference(const MeanGroupResult& a, const MeanGroupResult& b) {
  if (a.size() != b.size() || a.names != b.names) {
    fail(ErrorCode::DimensionMismatch, "group results carry different coefficients");
  }
  const std::set<std::string> left(a.units.begin(), a.units.end());
  for (const std::string& u : b.units) {
    if (left.count(u)) {
      fail(ErrorCode::OverlappingGroups, fmt::format("unit '{}' is in both '{}' and '{}'", u, a.group, b.group));
    }
  }
  GroupDifference out;
  out.z.resize(a.size());
  out.pvalue.resize(a.size());
  for (Index j = 0; j < a.size(); ++j) {
    const double diff = a.mean(j) - b.mean(j);
    const double se = std::sqrt(a.stderr(j) * a.stderr(j) + b.stderr(j) * b.stderr(j));
    out.z(j) = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff));
    out.pvalue(j) = stats::two_sided_p(out.z(j));
  }
  return out;
}

std::string stars(double z) {
  const double p = 0.5 * stats::two_sided_p(z);
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.10) return "*";
  return "";
}

namespace {

struct Grid {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Grid build(const std::vector<MeanGroupResult>& results, const TableOptions& options) {
  if (results.empty()) fail(ErrorCode::InvalidInput, "no group results to tabulate");
  const auto& names = results.front().names;
  for (const auto& r : results) {
    if (r.names != names) fail(ErrorCode::DimensionMismatch, "group results carry different coefficients");
  }
  Grid g;
  g.header.push_back("");
  for (std::size_t c = 0; c < results.size(); ++c) g.header.push_back(fmt::format("({}) {}", c + 1, results[c].group));
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (std::find(options.omit.begin(), options.omit.end(), names[j]) != options.omit.end()) continue;
    std::vector<std::string> row{names[j]};
    for (const auto& r : results) {
      const Index jj = static_cast<Index>(j);
      row.push_back(fmt::format("{:.{}f}{} ({:.{}f})", r.mean(jj), options.decimals,
                                options.stars ? stars(r.z(jj)) : "", r.stderr(jj), options.decimals));
    }
    g.rows.push_back(std::move(row));
  }
  std::vector<std::string> n{"N"}, nt{"NT"};
  for (const auto& r : results) {
    n.push_back(std::to_string(r.n));
    nt.push_back(std::to_string(r.nt));
  }
  g.rows.push_back(std::move(n));
  g.rows.push_back(std::move(nt));
  return g;
}

}  // namespace

void write_table_csv(const std::vector<MeanGroupResult>& results, const std::string& path,
                     const TableOptions& options) {
  const Grid g = build(results, options);
  io::CsvWriter out(path);
  out.row(g.header);
  for (const auto& r : g.rows) out.row(r);
}

std::string table_markdown(const std::vector<MeanGroupResult>& results, const TableOptions& options) {
  const Grid g = build(results, options);
  std::vector<std::size_t> width(g.header.size(), 3);
  for (std::size_t c = 0; c < g.header.size(); ++c) {
    width[c] = std::max(width[c], g.header[c].size());
    for (const auto& r : g.rows) width[c] = std::max(width[c], r[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s = "|";
    for (std::size_t c = 0; c < cells.size(); ++c) {
      s += c == 0 ? fmt::format(" {:<{}} |", cells[c], width[c]) : fmt::format(" {:>{}} |", cells[c], width[c]);
    }
    return s + "\n";
  };
  std::string out = line(g.header) + "|";
  for (std::size_t c = 0; c < width.size(); ++c) out += c == 0 ? ":" + std::string(width[c] + 1, '-') + "|" : std::string(width[c] + 1, '-') + ":|";
  out += "\n";
  for (const auto& r : g.rows) out += line(r);
  out += "\nStandard errors in parentheses.";
  if (options.stars) out += " Significance: * 10%, ** 5%, *** 1% (one-tailed).";
  return out + "\n";
}

}  // namespace dcp::meangroup
