#include "doctest.h"
#include "support.hpp"

#include "dcpanel/error.hpp"
#include "dcpanel/features.hpp"
#include "dcpanel/prep.hpp"

#include <chrono>
#include <cmath>

using namespace dcp;
using namespace dcp::features;
using namespace std::chrono;

namespace {

const double kGkConst = 2.0 * std::log(2.0) - 1.0;

Ohlcv bar(double o, double h, double l, double c, double v = 1.0) { return Ohlcv{o, h, l, c, v}; }

io::RawSeries flat_series(const std::string& unit, std::size_t days_count, double price, double volume) {
  io::RawSeries s;
  s.unit = unit;
  sys_days d{2021y / January / 4};
  for (std::size_t k = 0; k < days_count; ++k, d += days{1}) {
    s.dates.emplace_back(d);
    s.bars.push_back(bar(price, price, price, price, volume));
  }
  return s;
}

}  // namespace

TEST_CASE("log return examples") {
  CHECK(log_returns(std::vector<double>{100, 100})[0] == 0.0);
  CHECK(log_returns(std::vector<double>{100, 100 * std::exp(1.0)})[0] == doctest::Approx(1.0));
  const auto r = log_returns(std::vector<double>{100, 90, 99});
  CHECK(r[0] == doctest::Approx(std::log(0.9)));
  CHECK(r[1] == doctest::Approx(std::log(1.1)));
  try {
    log_returns(std::vector<double>{100, 0});
    FAIL("expected NonPositivePrice");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPositivePrice);
  }
}

TEST_CASE("log returns of a product are sums") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  std::vector<double> a(30), b(30), ab(30);
  for (std::size_t k = 0; k < 30; ++k) {
    a[k] = u(rng);
    b[k] = u(rng);
    ab[k] = a[k] * b[k];
  }
  const auto ra = log_returns(a), rb = log_returns(b), rab = log_returns(ab);
  for (std::size_t k = 0; k < ra.size(); ++k) CHECK(rab[k] == doctest::Approx(ra[k] + rb[k]).epsilon(1e-12));
}

TEST_CASE("Garman-Klass examples") {
  const double e = std::exp(1.0);
  const std::vector<Ohlcv> bars{bar(5, 5, 5, 5), bar(1, e, 1, 1), bar(1, e, 1, e)};
  const GarmanKlassResult gk = garman_klass(bars);
  CHECK(gk.volatility[0] == 0.0);
  CHECK(gk.volatility[1] == doctest::Approx(0.5));
  CHECK(gk.volatility[2] == doctest::Approx(0.5 - kGkConst));
  CHECK(gk.volatility[2] == doctest::Approx(0.11371).epsilon(1e-4));
  CHECK(gk.clamped == 0);
}

TEST_CASE("Garman-Klass is non-negative on valid bars") {
  // ln(h/l) >= |ln(c/o)| bounds the second term by the first.
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Ohlcv> bars;
  for (int k = 0; k < 2000; ++k) {
    const double l = 1 + u(rng), h = l * (1 + u(rng)), hi = u(rng) < 0.5;
    bars.push_back(hi ? bar(l, h, l, h) : bar(h, h, l, l + (h - l) * u(rng)));
  }
  const GarmanKlassResult gk = garman_klass(bars);
  CHECK(gk.clamped == 0);
  for (double v : gk.volatility) CHECK(v >= 0.0);
}

TEST_CASE("Garman-Klass is invariant to price rescaling") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Ohlcv> bars, scaled;
  for (int k = 0; k < 50; ++k) {
    const double l = 10 + u(rng), h = l + 3 * u(rng), o = l + (h - l) * u(rng), c = l + (h - l) * u(rng);
    bars.push_back(bar(o, h, l, c));
    scaled.push_back(bar(7.3 * o, 7.3 * h, 7.3 * l, 7.3 * c));
  }
  const auto a = garman_klass(bars), b = garman_klass(scaled);
  for (std::size_t k = 0; k < bars.size(); ++k) CHECK(b.volatility[k] == doctest::Approx(a.volatility[k]).epsilon(1e-10));
}

TEST_CASE("bar validation") {
  CHECK_THROWS_AS(validate_bar(bar(1, 0.9, 0.8, 1)), Error);
  CHECK_THROWS_AS(validate_bar(bar(1, 2, 1, 1, -1)), Error);
  CHECK_THROWS_AS(validate_bar(bar(-1, 2, -2, 1)), Error);
  CHECK_NOTHROW(validate_bar(bar(1, 2, 0.5, 1.5)));
}

TEST_CASE("Amihud examples") {
  const std::vector<double> zero(7, 0.0), ones(7, 1.0);
  CHECK(amihud(zero, ones)[0] == 0.0);
  const std::vector<double> tiny(7, 1e-6);
  CHECK(amihud(tiny, ones)[0] == doctest::Approx(1.0));
  std::vector<double> one_move(7, 0.0);
  one_move[0] = 0.01;
  const std::vector<double> big(7, 1e6);
  CHECK(amihud(one_move, big)[0] == doctest::Approx(1.0 / 700.0));
  // zero-return, zero-volume days contribute nothing
  std::vector<double> vols = ones;
  vols[3] = 0.0;
  CHECK(amihud(tiny, ones)[0] > amihud(std::vector<double>{1e-6, 1e-6, 1e-6, 0, 1e-6, 1e-6, 1e-6}, vols)[0]);
  try {
    amihud(tiny, vols);
    FAIL("expected ZeroVolumeWithMove");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroVolumeWithMove);
  }
}

TEST_CASE("Amihud scales inversely with volume") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.001, 0.1);
  std::vector<double> r(70), v(70), v3(70);
  for (std::size_t k = 0; k < 70; ++k) {
    r[k] = u(rng);
    v[k] = 1e5 * u(rng);
    v3[k] = 3.0 * v[k];
  }
  const auto a = amihud(r, v), b = amihud(r, v3);
  REQUIRE(a.size() == 10);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(b[k] == doctest::Approx(a[k] / 3.0).epsilon(1e-12));
}

TEST_CASE("cap-weighted market volatility") {
  Matrix vlt(2, 3), caps(2, 3);
  vlt << 0.1, 0.1, 0.1, 0.3, 0.3, 0.3;
  caps << 1, 5, 3, 1, 0, 1;
  const Vector c = capweighted_market_vol(vlt, caps);
  CHECK(c(0) == doctest::Approx(0.2));
  CHECK(c(1) == doctest::Approx(0.1));
  CHECK(c(2) == doctest::Approx(0.15));
  caps.col(1).setZero();
  try {
    capweighted_market_vol(vlt, caps);
    FAIL("expected AllZeroCaps");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AllZeroCaps);
  }
}

TEST_CASE("cap-weighted volatility lies between the unit extremes") {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix vlt(6, 40), caps(6, 40);
  for (Index i = 0; i < 6; ++i) {
    for (Index t = 0; t < 40; ++t) {
      vlt(i, t) = u(rng);
      caps(i, t) = u(rng);
    }
  }
  const Vector c = capweighted_market_vol(vlt, caps);
  for (Index t = 0; t < 40; ++t) {
    CHECK(c(t) >= vlt.col(t).minCoeff() - 1e-15);
    CHECK(c(t) <= vlt.col(t).maxCoeff() + 1e-15);
  }
}

TEST_CASE("prepare: flat prices give zero returns and volatility") {
  std::vector<io::RawSeries> daily{flat_series("a", 28, 50.0, 10.0), flat_series("b", 30, 20.0, 5.0)};
  daily[1].dates.resize(28);
  daily[1].bars.resize(28);
  const FeatureTable t = prepare(daily);
  CHECK(t.weeks.size() == 3);
  CHECK(t.weeks.front() == 2021y / January / 11);
  CHECK((t.r.array() == 0.0).all());
  CHECK((t.vlt.array() == 0.0).all());
  CHECK((t.ilq.array() == 0.0).all());
  CHECK(t.vlm(0, 0) == doctest::Approx(70.0));
  CHECK(!t.cvlt);
}

TEST_CASE("prepare: one 1% move at volume 1e6 gives ILQ 1/700") {
  std::vector<io::RawSeries> daily{flat_series("a", 21, 100.0, 1e6), flat_series("b", 21, 100.0, 1e6)};
  const double p = 100.0 * std::exp(0.01);
  for (std::size_t d = 7; d < 21; ++d) daily[0].bars[d] = bar(p, p, p, p, 1e6);
  daily[0].bars[7] = bar(100.0, p, 100.0, p, 1e6);
  const FeatureTable t = prepare(daily);
  REQUIRE(t.weeks.size() == 2);
  CHECK(t.ilq(0, 0) == doctest::Approx(1.0 / 700.0));
  CHECK(t.ilq(0, 1) == 0.0);
  CHECK(t.r(0, 0) == doctest::Approx(0.01));
  CHECK(t.vlt(0, 0) == doctest::Approx(0.5 * 1e-4 - kGkConst * 1e-4));
}

TEST_CASE("prepare: caps give market volatility; calendars must agree") {
  std::vector<io::RawSeries> daily{flat_series("a", 21, 100.0, 1.0), flat_series("b", 21, 100.0, 1.0)};
  for (auto& s : daily) s.caps.assign(21, 1.0);
  CHECK(prepare(daily).cvlt.has_value());
  daily[1].dates[3] = daily[1].dates[2];
  CHECK_THROWS_AS(prepare(daily), Error);
}
