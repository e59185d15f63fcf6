#include "doctest.h"
#include "support.hpp"

#include "dcpanel/error.hpp"
#include "dcpanel/panel.hpp"

#include <chrono>
#include <cmath>

using namespace dcp;
using namespace std::chrono;

namespace {

std::vector<panel::Date> weekly_from(panel::Date start, Index count) {
  std::vector<panel::Date> out;
  sys_days d{start};
  for (Index k = 0; k < count; ++k, d += days{7}) out.emplace_back(d);
  return out;
}

panel::PanelDataset small_panel(Index n, Index t) {
  std::mt19937_64 rng(5);
  panel::PanelDataset p;
  for (Index i = 0; i < n; ++i) p.unit_ids.push_back("u" + std::to_string(i));
  p.time_index = weekly_from(2021y / January / 4, t);
  p.outcome = dcp::testing::gaussian(n, t, rng);
  for (Index i = 0; i < n; ++i) p.covariates.push_back(dcp::testing::gaussian(t, 2, rng));
  p.covariate_names = {"a", "b"};
  return p;
}

}  // namespace

TEST_CASE("lag examples") {
  Matrix x(4, 1);
  x << 1, 2, 3, 4;
  const panel::LaggedSeries l1 = panel::lag(x, 1);
  CHECK(std::isnan(l1.values(0, 0)));
  CHECK(l1.values(1, 0) == 1);
  CHECK(l1.values(3, 0) == 3);
  CHECK(l1.available_from == 1);
  CHECK(panel::lag(x, 0).values == x);
  Matrix abc(3, 1);
  abc << 7, 8, 9;
  const panel::LaggedSeries l2 = panel::lag(abc, 2);
  CHECK(std::isnan(l2.values(0, 0)));
  CHECK(std::isnan(l2.values(1, 0)));
  CHECK(l2.values(2, 0) == 7);
  CHECK_THROWS_AS(panel::lag(abc, 3), Error);
}

TEST_CASE("effective sample bookkeeping") {
  CHECK(panel::trim_common(157, 5, 1).length() == 151);
  CHECK(40 * panel::trim_common(157, 5, 1).length() == 6040);
  CHECK(40 * panel::trim_common(157, 1, 1).length() == 6200);
  const panel::EffectiveSample id = panel::trim_common(10, 0, 0);
  CHECK(id.length() == 10);
  Matrix x = Matrix::Random(10, 2);
  CHECK(panel::trim(x, id) == x);
  try {
    panel::trim_common(10, 6, 1, 3, 2);
    FAIL("expected SampleTooShort");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SampleTooShort);
  }
}

TEST_CASE("lag then trim commutes with trim then lag") {
  std::mt19937_64 rng(6);
  const Matrix x = dcp::testing::gaussian(30, 3, rng);
  for (Index zeta = 0; zeta < 6; ++zeta) {
    const panel::EffectiveSample s = panel::trim_common(30, zeta, 1);
    for (Index tau = 0; tau <= s.start; ++tau) {
      const Matrix a = panel::trim(panel::lag(x, tau).values, s);
      CHECK(a == panel::lagged_rows(x, s, tau));
    }
  }
}

TEST_CASE("monthly aggregation") {
  Matrix w(4, 1);
  w << 1, 2, 3, 4;
  const auto dates = weekly_from(2021y / March / 1, 4);
  panel::MonthlyOptions mean;
  CHECK(panel::aggregate_to_months(w, dates, mean).values(0, 0) == doctest::Approx(2.5));
  panel::MonthlyOptions median;
  median.method = panel::Aggregation::Median;
  CHECK(panel::aggregate_to_months(w, dates, median).values(0, 0) == doctest::Approx(2.5));
}

TEST_CASE("aggregating a constant series gives the constant") {
  const auto dates = weekly_from(2020y / January / 6, 60);
  const Matrix w = Matrix::Constant(60, 2, 3.25);
  const panel::MonthlySeries m = panel::aggregate_to_months(w, dates);
  CHECK((m.values.array() == 3.25).all());
  for (std::size_t k = 1; k < m.months.size(); ++k) CHECK(m.months[k - 1] + months{1} == m.months[k]);
}

TEST_CASE("157 weeks from 2019-12-30 span 37 months, 36 without the one-week boundary month") {
  const auto dates = weekly_from(2019y / December / 30, 157);
  CHECK(dates.back() == 2022y / December / 26);
  const Matrix w = Matrix::Zero(157, 1);
  CHECK(panel::aggregate_to_months(w, dates).months.size() == 37);
  panel::MonthlyOptions drop;
  drop.min_boundary_weeks = 2;
  const panel::MonthlySeries m = panel::aggregate_to_months(w, dates, drop);
  CHECK(m.months.size() == 36);
  CHECK(m.months.front() == 2020y / January);
}

TEST_CASE("a calendar gap is an empty month") {
  std::vector<panel::Date> dates{2021y / January / 4, 2021y / March / 1};
  try {
    panel::aggregate_to_months(Matrix::Zero(2, 1), dates);
    FAIL("expected EmptyMonth");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyMonth);
  }
}

TEST_CASE("panel validation") {
  panel::PanelDataset p = small_panel(3, 8);
  CHECK_NOTHROW(p.validate());
  CHECK(p.select(1, {"b"}) == p.covariates[1].col(1));

  panel::PanelDataset one = small_panel(1, 8);
  CHECK_THROWS_AS(one.validate(), Error);

  panel::PanelDataset missing = small_panel(3, 8);
  missing.outcome(2, 4) = std::nan("");
  CHECK_THROWS_AS(missing.validate(), Error);

  panel::PanelDataset unordered = small_panel(3, 8);
  std::swap(unordered.time_index[2], unordered.time_index[3]);
  CHECK_THROWS_AS(unordered.validate(), Error);

  panel::PanelDataset ragged = small_panel(3, 8);
  ragged.covariates[0].conservativeResize(7, 2);
  CHECK_THROWS_AS(ragged.validate(), Error);
}

TEST_CASE("group maps must label every unit once") {
  panel::GroupMap g;
  g.schemes["green"] = {{"u0", "yes"}, {"u1", "no"}};
  CHECK_NOTHROW(g.validate({"u0", "u1"}));
  CHECK_THROWS_AS(g.validate({"u0", "u1", "u2"}), Error);
  CHECK_THROWS_AS(g.validate({"u0"}), Error);
  CHECK(g.labels("green") == std::vector<std::string>{"no", "yes"});
}

TEST_CASE("dates round trip") {
  CHECK(panel::format_date(panel::parse_date("2022-02-28")) == "2022-02-28");
  CHECK(panel::format_month(panel::parse_month("2022-02")) == "2022-02");
  CHECK_THROWS_AS(panel::parse_date("2022-02-30"), Error);
  CHECK_THROWS_AS(panel::parse_date("22/02/2022"), Error);
}
