#pragma once

// End-to-end estimation: Stage 1 exposures, Stage 2 proxy selection and
// exposures, Mean Group summaries overall and by group.

#include "dcpanel/datasets.hpp"
#include "dcpanel/meangroup.hpp"
#include "dcpanel/stage1.hpp"
#include "dcpanel/stage2.hpp"

#include <filesystem>
#include <optional>

namespace dcp::pipeline {

struct EstimateConfig {
  stage1::Config stage1;
  std::vector<std::string> regressors{"ILQ", "VLT"};   // x_it besides the own lag
  std::vector<std::string> semi{"VLM", "VLT"};         // z_it
  stage2::PcaMtbOptions stage2;
  panel::MonthlyOptions monthly;
  bool shapley = true;
};

struct EstimateInputs {
  panel::PanelDataset panel;
  panel::ObservedFactors factors;
  io::ProxyTable proxies;
  panel::GroupMap groups;   // may be empty
};

struct SchemeTables {
  std::string scheme;
  std::vector<meangroup::MeanGroupResult> theta;
  std::vector<meangroup::MeanGroupResult> delta;
  /// Filled when the scheme has exactly two labels.
  std::optional<meangroup::GroupDifference> theta_difference;
  std::optional<meangroup::GroupDifference> delta_difference;
};

struct EstimateReport {
  stage1::Result stage1;
  std::vector<panel::Date> sample_dates;
  stage2::PcaMtbResult stage2;
  std::vector<std::string> selected_names;
  std::optional<stage2::ShapleyReport> shapley;
  std::vector<stage2::ExposureFit> exposures;   // empty when nothing is selected
  meangroup::MeanGroupResult theta_all;
  std::optional<meangroup::MeanGroupResult> delta_all;
  std::vector<SchemeTables> schemes;

  Index nt() const { return stage1.nt(); }
};

/// Validates everything before any computation.
void validate(const EstimateInputs& inputs, const EstimateConfig& config);
stage1::Inputs stage1_inputs(const EstimateInputs& inputs, const EstimateConfig& config);
EstimateReport run_estimate(const EstimateInputs& inputs, const EstimateConfig& config);

/// stage1_coefficients.csv, residual_diagnostics.csv, component.csv,
/// selection.csv, shapley.csv, exposures.csv, mg_*.csv/.md, group_differences.csv.
void write_report(const EstimateReport& report, const std::filesystem::path& dir, bool stars = true);

}  // namespace dcp::pipeline
