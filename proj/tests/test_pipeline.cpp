#include "doctest.h"
#include "support.hpp"

#include "dcpanel/error.hpp"
#include "dcpanel/pipeline.hpp"
#include "dcpanel/synthetic.hpp"

#include <cmath>
#include <filesystem>

using namespace dcp;

TEST_CASE("synthetic round trip: Mean Group recovers the population means") {
  mc::ModelConfig c;
  c.N = 60;
  c.T = 200;
  c.seed = 3;
  const mc::ModelDraw d = mc::generate_model(c);
  pipeline::EstimateConfig cfg;
  cfg.stage1.zeta = 1;
  const pipeline::EstimateReport r = pipeline::run_estimate(mc::estimate_inputs(d), cfg);
  REQUIRE(r.theta_all.names.back() == "const");
  // The intercept absorbs the mean of the latent component and is not compared.
  for (Index j = 0; j + 1 < d.theta_mean.size(); ++j) {
    const double z = (r.theta_all.mean(j) - d.theta_mean(j)) / r.theta_all.stderr(j);
    INFO(r.theta_all.names[static_cast<std::size_t>(j)] << " z = " << z);
    CHECK(std::abs(z) < 3.0);
  }
  CHECK(r.nt() == 60 * r.stage1.sample.length());
  REQUIRE(r.schemes.size() == 1);
  CHECK(r.schemes[0].theta.size() == 2);
  CHECK(r.schemes[0].theta_difference.has_value());

  const auto dir = std::filesystem::temp_directory_path() / "dcpanel_pipeline_report";
  pipeline::write_report(r, dir);
  CHECK(std::filesystem::exists(dir / "stage1_coefficients.csv"));
  CHECK(std::filesystem::exists(dir / "selection.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("empirical-shaped sample: N = 40, T = 157, zeta = 5") {
  mc::ModelConfig c;
  c.N = 40;
  c.T = 157;
  c.k_y = 10;
  c.seed = 4;
  const mc::ModelDraw d = mc::generate_model(c);
  const pipeline::EstimateReport r = pipeline::run_estimate(mc::estimate_inputs(d), {});
  CHECK(r.nt() == 6040);
  CHECK(r.sample_dates.size() == 151);
  CHECK(r.stage1.k_iv == 33);
}

TEST_CASE("inputs are validated before estimation") {
  mc::ModelConfig c;
  c.N = 10;
  c.T = 60;
  pipeline::EstimateInputs in = mc::estimate_inputs(mc::generate_model(c));
  pipeline::EstimateConfig cfg;

  pipeline::EstimateInputs one = in;
  one.panel.unit_ids.resize(1);
  one.panel.outcome = in.panel.outcome.topRows(1).eval();
  one.panel.covariates.resize(1);
  one.groups = {};
  CHECK_THROWS_AS(pipeline::run_estimate(one, cfg), Error);

  pipeline::EstimateConfig bad = cfg;
  bad.regressors = {"ILQ", "missing"};
  CHECK_THROWS_AS(pipeline::run_estimate(in, bad), Error);

  pipeline::EstimateInputs shifted = in;
  shifted.factors.time_index.front() = panel::Date{std::chrono::year{1999}, std::chrono::January, std::chrono::day{4}};
  CHECK_THROWS_AS(pipeline::run_estimate(shifted, cfg), Error);
}
