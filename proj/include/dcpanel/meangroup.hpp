#pragma once

#include "dcpanel/linalg.hpp"
#include "dcpanel/panel.hpp"

#include <string>
#include <vector>

namespace dcp::meangroup {

struct MeanGroupResult {
  std::string group;
  std::vector<std::string> units;   // members, for overlap checks
  std::vector<std::string> names;   // coefficient names
  Vector mean;
  Matrix sigma_eta;                 // 1/(N-1) sum of outer deviations
  Matrix covariance;                // sigma_eta / N
  Vector stderr;
  Vector z;
  Index n = 0;
  Index nt = 0;                     // observations behind the per-unit fits

  Index size() const { return mean.size(); }
};

/// Mean Group estimate from an N x K matrix of per-unit coefficients.
MeanGroupResult mean_group(const Matrix& coefficients, std::vector<std::string> names = {},
                           std::string group = "all", std::vector<std::string> units = {},
                           Index periods_per_unit = 0);

/// One result per label of a grouping scheme, in sorted label order.
std::vector<MeanGroupResult> by_group(const Matrix& coefficients, const std::vector<std::string>& unit_ids,
                                      const std::vector<std::string>& names, const panel::GroupMap& groups,
                                      const std::string& scheme, Index periods_per_unit = 0);

struct GroupDifference {
  Vector z;
  Vector pvalue;   // two-sided
};

/// Unpaired z-test per coefficient; groups must not share units.
GroupDifference group_difference(const MeanGroupResult& a, const MeanGroupResult& b);

/// One-tailed stars (* 10%, ** 5%, *** 1%) in the direction of the estimate.
std::string stars(double z);

struct TableOptions {
  int decimals = 3;
  bool stars = true;
  std::vector<std::string> omit;    // coefficient names left out, e.g. "const"
};

/// Table with one column per result: "estimate (stderr)" cells plus N and NT rows.
void write_table_csv(const std::vector<MeanGroupResult>& results, const std::string& path,
                     const TableOptions& options = {});
std::string table_markdown(const std::vector<MeanGroupResult>& results, const TableOptions& options = {});

}  // namespace dcp::meangroup
