#include "dcpanel/pipeline.hpp"

#include "dcpanel/csv.hpp"
#include "dcpanel/error.hpp"

#include <fmt/format.h>

#include <fstream>

namespace dcp::pipeline {
namespace {

std::vector<std::string> labelled(const std::vector<std::string>& names, const std::vector<std::string>& extra) {
  std::vector<std::string> out = names;
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

SchemeTables scheme_tables(const EstimateReport& r, const Matrix& theta, const Matrix* delta,
                           const panel::GroupMap& groups, const std::string& scheme, Index t_eff) {
  SchemeTables s;
  s.scheme = scheme;
  s.theta = meangroup::by_group(theta, r.stage1.units, r.stage1.param_names, groups, scheme, t_eff);
  if (delta) s.delta = meangroup::by_group(*delta, r.stage1.units, r.selected_names, groups, scheme, t_eff);
  if (s.theta.size() == 2) {
    s.theta_difference = meangroup::group_difference(s.theta[0], s.theta[1]);
    if (delta) s.delta_difference = meangroup::group_difference(s.delta[0], s.delta[1]);
  }
  return s;
}

}  // namespace

void validate(const EstimateInputs& in, const EstimateConfig& config) {
  in.panel.validate();
  in.factors.validate(in.panel.time_index);
  in.proxies.pool.validate();
  if (static_cast<Index>(in.proxies.months.size()) != in.proxies.pool.periods()) {
    fail(ErrorCode::DimensionMismatch, "proxy months differ in count from proxy rows");
  }
  in.groups.validate(in.panel.unit_ids);
  for (const auto& name : labelled(config.regressors, config.semi)) in.panel.index_of(name);
  config.stage2.mtb.validate();
  if (config.stage1.zeta < 0) fail(ErrorCode::InvalidConfig, "zeta must be non-negative");
}

stage1::Inputs stage1_inputs(const EstimateInputs& in, const EstimateConfig& config) {
  stage1::Inputs s;
  s.units = in.panel.unit_ids;
  s.outcome = in.panel.outcome;
  for (Index i = 0; i < in.panel.units(); ++i) {
    s.regressors.push_back(in.panel.select(i, config.regressors));
    s.semi.push_back(in.panel.select(i, config.semi));
  }
  s.observed = in.factors.values;
  s.regressor_names = config.regressors;
  s.semi_names = config.semi;
  s.observed_names = in.factors.names;
  return s;
}

EstimateReport run_estimate(const EstimateInputs& in, const EstimateConfig& config) {
  validate(in, config);
  EstimateReport r;
  r.stage1 = stage1::run(stage1_inputs(in, config), config.stage1);
  const Index start = r.stage1.sample.start;
  r.sample_dates.assign(in.panel.time_index.begin() + start, in.panel.time_index.end());
  const Matrix residuals = r.stage1.residual_matrix();

  // Proxies aligned to the months spanned by the residual sample.
  const panel::MonthlySeries monthly = stage2::monthly_residuals(residuals, r.sample_dates, config.monthly);
  const selection::CandidatePool pool = stage2::align_pool(in.proxies.pool, in.proxies.months, monthly.months);
  r.stage2 = stage2::pca_mtb(residuals, pool, config.stage2, &r.sample_dates, config.monthly);
  for (Index j : r.stage2.selection.selected) r.selected_names.push_back(pool.names[static_cast<std::size_t>(j)]);

  const Index t_eff = r.stage1.sample.length();
  const Matrix theta = r.stage1.coefficient_matrix();
  r.theta_all = meangroup::mean_group(theta, r.stage1.param_names, "Full Sample", r.stage1.units, t_eff);

  Matrix delta;
  if (!r.selected_names.empty()) {
    if (config.shapley) r.shapley = stage2::shapley_owen(r.stage2.components.front().monthly, r.stage2.design);
    r.exposures = stage2::exposure_regressions(monthly.values, r.stage2.design);
    delta.resize(static_cast<Index>(r.exposures.size()), r.stage2.design.cols());
    for (std::size_t i = 0; i < r.exposures.size(); ++i) delta.row(static_cast<Index>(i)) = r.exposures[i].delta.transpose();
    r.delta_all = meangroup::mean_group(delta, r.selected_names, "Full Sample", r.stage1.units, t_eff);
  }
  for (const auto& [scheme, assignment] : in.groups.schemes) {
    r.schemes.push_back(scheme_tables(r, theta, r.selected_names.empty() ? nullptr : &delta, in.groups, scheme, t_eff));
  }
  return r;
}

void write_report(const EstimateReport& r, const std::filesystem::path& dir, bool stars) {
  std::filesystem::create_directories(dir);
  using io::format_number;
  {
    io::CsvWriter out(dir / "stage1_coefficients.csv");
    out.row({"unit", "param", "estimate", "stderr"});
    for (std::size_t i = 0; i < r.stage1.fits.size(); ++i) {
      const auto& f = r.stage1.fits[i];
      for (Index j = 0; j < f.theta.size(); ++j) {
        out.row({r.stage1.units[i], r.stage1.param_names[static_cast<std::size_t>(j)], format_number(f.theta(j)),
                 format_number(f.stderr(j))});
      }
    }
  }
  {
    io::CsvWriter out(dir / "residual_diagnostics.csv");
    out.row({"unit", "mean", "sd", "autocorr1", "min_singular_a", "condition_b", "jitter"});
    for (std::size_t i = 0; i < r.stage1.fits.size(); ++i) {
      const auto& f = r.stage1.fits[i];
      const Vector u = f.residuals.array() - f.residuals.mean();
      const double ss = u.squaredNorm();
      const Index t = u.size();
      const double ac = ss > 0.0 ? u.head(t - 1).dot(u.tail(t - 1)) / ss : 0.0;
      out.row({r.stage1.units[i], format_number(f.residuals.mean()),
               format_number(std::sqrt(ss / static_cast<double>(t - 1))), format_number(ac),
               format_number(f.diagnostics.min_singular_a), format_number(f.diagnostics.condition_b),
               format_number(f.diagnostics.jitter)});
    }
  }
  {
    const auto& c = r.stage2.components.front();
    io::CsvWriter weekly(dir / "component_weekly.csv");
    weekly.row({"date", "e1"});
    for (Index t = 0; t < c.weekly.size(); ++t) {
      weekly.row({panel::format_date(r.sample_dates[static_cast<std::size_t>(t)]), format_number(c.weekly(t))});
    }
    io::CsvWriter monthly(dir / "component_monthly.csv");
    monthly.row({"month", "e1"});
    for (Index t = 0; t < c.monthly.size(); ++t) {
      monthly.row({panel::format_month(c.months[static_cast<std::size_t>(t)]), format_number(c.monthly(t))});
    }
  }
  {
    io::CsvWriter out(dir / "selection.csv");
    out.row({"step", "candidate", "name", "tstat", "pvalue", "threshold"});
    const auto& steps = r.stage2.selection.steps;
    for (std::size_t s = 0; s < steps.size(); ++s) {
      out.row({std::to_string(s + 1), std::to_string(steps[s].candidate), r.selected_names[s],
               format_number(steps[s].tstat), format_number(steps[s].pvalue), format_number(steps[s].threshold)});
    }
  }
  if (r.shapley) {
    io::CsvWriter out(dir / "shapley.csv");
    out.row({"proxy", "share", "share_of_R2"});
    const double total = r.shapley->total_r2;
    for (std::size_t j = 0; j < r.shapley->shares.size(); ++j) {
      const double s = r.shapley->shares[j];
      out.row({r.selected_names[j], format_number(s), format_number(total > 0.0 ? s / total : 0.0)});
    }
    out.row({"total", format_number(total), format_number(total > 0.0 ? 1.0 : 0.0)});
  }
  {
    io::CsvWriter out(dir / "exposures.csv");
    out.row({"unit", "proxy", "estimate", "stderr"});
    for (std::size_t i = 0; i < r.exposures.size(); ++i) {
      const auto& f = r.exposures[i];
      for (Index j = 0; j < f.delta.size(); ++j) {
        out.row({r.stage1.units[i], r.selected_names[static_cast<std::size_t>(j)], format_number(f.delta(j)),
                 format_number(f.stderr(j))});
      }
    }
  }

  meangroup::TableOptions table;
  table.stars = stars;
  table.omit = {"const"};
  auto emit = [&](const std::string& stem, const std::vector<meangroup::MeanGroupResult>& cols) {
    meangroup::write_table_csv(cols, (dir / (stem + ".csv")).string(), table);
    std::ofstream md(dir / (stem + ".md"), std::ios::binary);
    md << meangroup::table_markdown(cols, table);
  };
  std::vector<meangroup::MeanGroupResult> theta_cols{r.theta_all}, delta_cols;
  if (r.delta_all) delta_cols.push_back(*r.delta_all);
  for (const auto& s : r.schemes) {
    theta_cols.insert(theta_cols.end(), s.theta.begin(), s.theta.end());
    delta_cols.insert(delta_cols.end(), s.delta.begin(), s.delta.end());
  }
  emit("mg_stage1", theta_cols);
  if (!delta_cols.empty()) emit("mg_exposures", delta_cols);

  io::CsvWriter diff(dir / "group_differences.csv");
  diff.row({"scheme", "table", "coefficient", "group_a", "group_b", "z", "pvalue"});
  auto diff_rows = [&](const SchemeTables& s, const std::string& name, const std::vector<meangroup::MeanGroupResult>& g,
                       const meangroup::GroupDifference& d) {
    for (Index j = 0; j < d.z.size(); ++j) {
      diff.row({s.scheme, name, g[0].names[static_cast<std::size_t>(j)], g[0].group, g[1].group, format_number(d.z(j)),
                format_number(d.pvalue(j))});
    }
  };
  for (const auto& s : r.schemes) {
    if (s.theta_difference) diff_rows(s, "stage1", s.theta, *s.theta_difference);
    if (s.delta_difference) diff_rows(s, "exposures", s.delta, *s.delta_difference);
  }
}

}  // namespace dcp::pipeline
