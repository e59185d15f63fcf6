#include "doctest.h"
#include "support.hpp"

#include "dcpanel/error.hpp"
#include "dcpanel/kernels.hpp"
#include "dcpanel/linalg.hpp"
#include "dcpanel/montecarlo.hpp"

#include <cmath>
#include <vector>

using namespace dcp;
using dcp::testing::gaussian;
using dcp::testing::max_abs;

TEST_CASE("annihilator of a constant column is the demeaning matrix") {
  const linalg::Projector p = linalg::annihilator(Matrix::Ones(2, 1));
  Matrix expected(2, 2);
  expected << 0.5, -0.5, -0.5, 0.5;
  CHECK(max_abs(p.annihilator - expected) < 1e-12);
}

TEST_CASE("annihilator of an orthonormal basis is I - QQ'") {
  std::mt19937_64 rng(11);
  const Matrix q = Eigen::HouseholderQR<Matrix>(gaussian(20, 4, rng)).householderQ() * Matrix::Identity(20, 4);
  const linalg::Projector p = linalg::annihilator(q);
  CHECK(max_abs(p.annihilator - (Matrix::Identity(20, 20) - q * q.transpose())) < 1e-12);
  CHECK(max_abs(p.annihilator * q) < 1e-12);
}

TEST_CASE("projector properties on random bases") {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 50; ++rep) {
    const Index t = 10 + rep, k = 1 + rep % 6;
    const Matrix a = gaussian(t, k, rng) * (1.0 + rep);
    const linalg::Projector p = linalg::annihilator(a);
    const Matrix& m = p.annihilator;
    CHECK(max_abs(m * m - m) < 1e-8);
    CHECK(max_abs(m - m.transpose()) < 1e-10);
    CHECK(max_abs(m * a) < 1e-8 * (1.0 + rep));
    CHECK(std::abs(m.trace() - static_cast<double>(t - k)) < 1e-8);
    const Matrix x = gaussian(t, 3, rng);
    CHECK(max_abs(p.apply(x) - m * x) < 1e-10);
  }
}

TEST_CASE("annihilator trace on a 50 x 3 basis") {
  std::mt19937_64 rng(13);
  CHECK(linalg::annihilator(gaussian(50, 3, rng)).annihilator.trace() == doctest::Approx(47.0).epsilon(1e-10));
}

TEST_CASE("annihilator rejects dependent and wide bases") {
  std::mt19937_64 rng(14);
  Matrix a = gaussian(10, 3, rng);
  a.col(2) = a.col(0) - 2.0 * a.col(1);
  CHECK_THROWS_AS(linalg::annihilator(a), Error);
  try {
    linalg::annihilator(a);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficient);
  }
  try {
    linalg::annihilator(gaussian(3, 3, rng));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("extract_factors on a diagonal covariance") {
  Matrix c(2, 2);
  c << 2.0, 0.0, 0.0, 1.0;
  const linalg::FactorEstimate f = linalg::extract_factors(c, 1);
  CHECK(f.eigenvalues(0) == doctest::Approx(2.0));
  CHECK(f.explained_share(0) == doctest::Approx(2.0 / 3.0));
  CHECK(f.factors(0, 0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(std::abs(f.factors(1, 0)) < 1e-12);
}

TEST_CASE("extract_factors of a noise-free one-factor panel explains everything") {
  std::mt19937_64 rng(15);
  const Vector g = gaussian(40, rng);
  const Vector load = gaussian(30, rng);
  const Matrix u = load * g.transpose();  // N x T
  const linalg::FactorEstimate f = linalg::extract_factors(linalg::pooled_covariance(u), 1);
  CHECK(f.explained_share(0) == doctest::Approx(1.0).epsilon(1e-8));
  const double corr = f.factors.col(0).normalized().dot(g.normalized());
  CHECK(std::abs(std::abs(corr) - 1.0) < 1e-8);
}

TEST_CASE("factor normalization, ordering, sign and best rank-k reconstruction") {
  std::mt19937_64 rng(16);
  for (int rep = 0; rep < 20; ++rep) {
    const Index t = 15 + rep;
    const Matrix x = gaussian(t, t + 5, rng);
    const Matrix c = x * x.transpose() / static_cast<double>(t);
    const Index k = 1 + rep % 4;
    const linalg::FactorEstimate f = linalg::extract_factors(c, k);
    const Matrix ftf = f.factors.transpose() * f.factors / static_cast<double>(t);
    CHECK(max_abs(ftf - Matrix::Identity(k, k)) < 1e-8);
    for (Index j = 0; j + 1 < f.spectrum.size(); ++j) CHECK(f.spectrum(j) >= f.spectrum(j + 1));
    CHECK(f.spectrum.minCoeff() >= 0.0);
    CHECK(f.explained_share.sum() <= 1.0 + 1e-12);
    for (Index j = 0; j < k; ++j) {
      Index arg = 0;
      f.factors.col(j).cwiseAbs().maxCoeff(&arg);
      CHECK(f.factors(arg, j) > 0.0);
    }
    const Matrix ck = f.factors * f.eigenvalues.asDiagonal() * f.factors.transpose() / static_cast<double>(t);
    const double discarded = f.spectrum.tail(t - k).squaredNorm();
    CHECK(std::abs((c - ck).norm() - std::sqrt(discarded)) < 1e-6);
  }
}

TEST_CASE("extract_factors errors") {
  Matrix c = Matrix::Identity(3, 3);
  CHECK_THROWS_AS(linalg::extract_factors(c, 3), Error);
  c(0, 1) = 1.0;
  try {
    linalg::extract_factors(c, 1);
    FAIL("expected NotSymmetric");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotSymmetric);
  }
}

TEST_CASE("leading factor tracks the generating factor") {
  mc::DgpConfig cfg;
  cfg.r = 1;
  cfg.n = 1;
  cfg.T = 200;
  cfg.N = 200;
  cfg.phi = 1.0;
  cfg.seed = 3;
  const mc::DgpDraw d = mc::generate_dgp(cfg);
  const linalg::FactorEstimate f = linalg::extract_factors(linalg::pooled_covariance(d.u), 1);
  const Vector a = f.factors.col(0).array() - f.factors.col(0).mean();
  const Vector b = d.g.col(0).array() - d.g.col(0).mean();
  CHECK(std::abs(a.dot(b) / (a.norm() * b.norm())) > 0.95);
}

TEST_CASE("eigenvalue ratio examples") {
  CHECK(linalg::eigenvalue_ratio_count(std::vector<double>{10, 5, 0.1, 0.05}, 3) == 2);
  CHECK(linalg::eigenvalue_ratio_count(std::vector<double>{9, 0.1, 0.09}, 2) == 1);
  CHECK(linalg::eigenvalue_ratio_count(std::vector<double>{4, 2, 1, 0.5}, 3) == 1);  // tie -> smallest k
  CHECK_THROWS_AS(linalg::eigenvalue_ratio_count(std::vector<double>{}, 1), Error);
}

TEST_CASE("eigenvalue ratio is scale invariant") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.01, 5.0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> ev(9);
    for (double& v : ev) v = u(rng);
    std::sort(ev.rbegin(), ev.rend());
    std::vector<double> scaled = ev;
    for (double& v : scaled) v *= 37.5;
    CHECK(linalg::eigenvalue_ratio_count(ev, 8) == linalg::eigenvalue_ratio_count(scaled, 8));
  }
}

TEST_CASE("eigenvalue ratio recovers three factors") {
  std::mt19937_64 rng(18);
  const Index n = 200, t = 200, reps = 200;
  int hits = 0;
  for (Index rep = 0; rep < reps; ++rep) {
    const Matrix g = gaussian(t, 3, rng);
    const Matrix load = gaussian(n, 3, rng);
    const Matrix u = load * g.transpose() + gaussian(n, t, rng);
    const linalg::FactorEstimate f = linalg::extract_factors(linalg::pooled_covariance(u), 1);
    if (linalg::eigenvalue_ratio_count(f.spectrum, 8) == 3) ++hits;
  }
  CHECK(static_cast<double>(hits) / reps >= 0.95);
}

TEST_CASE("parallel kernels equal their serial twins") {
  std::mt19937_64 rng(19);
  const Matrix x = gaussian(37, 113, rng);
  for (int threads : {1, 2, 4, 8}) {
    kernels::set_threads(threads);
    CHECK(kernels::cross_product(x) == kernels::cross_product_serial(x));
    CHECK(max_abs(kernels::cross_product(x) - x.transpose() * x) < 1e-10);

    const Vector y = gaussian(80, rng);
    const Matrix z = gaussian(80, 60, rng);
    std::vector<unsigned char> skip(60, 0);
    skip[5] = 1;
    std::vector<double> ref(60, 1.0);
    const kernels::CandidateInputs in{y, z, skip, ref, 2};
    Vector par(60), ser(60);
    kernels::candidate_tstats(in, par);
    kernels::candidate_tstats_serial(in, ser);
    CHECK(par == ser);
    CHECK(par(5) == 0.0);
  }
  kernels::set_threads(1);
}
