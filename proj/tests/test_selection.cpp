#include "doctest.h"
#include "support.hpp"

#include "dcpanel/error.hpp"
#include "dcpanel/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace dcp;
using namespace dcp::selection;
using dcp::testing::gaussian;
using dcp::testing::max_abs;

namespace {

double normal_two_sided(double t) { return std::erfc(std::abs(t) / std::sqrt(2.0)); }

/// Forward selection by explicit regressions on [1, selected, candidate].
std::vector<Index> mtb_oracle(const Vector& y, const Matrix& z, const MtbConfig& cfg) {
  const Index t = z.rows(), n = z.cols();
  std::vector<Index> chosen;
  const Index steps = cfg.max_steps ? *cfg.max_steps : std::min(t / 2, n);
  for (Index pass = 1; pass <= steps; ++pass) {
    Index best = -1;
    double best_t = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (std::find(chosen.begin(), chosen.end(), j) != chosen.end()) continue;
      Matrix x(t, static_cast<Index>(chosen.size()) + 2);
      x.col(0).setOnes();
      for (std::size_t k = 0; k < chosen.size(); ++k) x.col(static_cast<Index>(k) + 1) = z.col(chosen[k]);
      x.col(x.cols() - 1) = z.col(j);
      const Vector b = dcp::testing::normal_equations(y, x);
      const double tj = b(x.cols() - 1) / dcp::testing::hc1_stderr(y, x)(x.cols() - 1);
      if (std::abs(tj) > std::abs(best_t)) {
        best_t = tj;
        best = j;
      }
    }
    const double threshold = cfg.p_val / (cfg.c1 * std::pow(static_cast<double>(n - (pass - 1)), cfg.delta1 - 1.0));
    if (best < 0 || normal_two_sided(best_t) > threshold) break;
    chosen.push_back(best);
  }
  return chosen;
}

double lasso_objective(const Vector& y, const Matrix& x, double xi, const Vector& b) {
  return (y - x * b).squaredNorm() / (2.0 * static_cast<double>(y.size())) + xi * b.lpNorm<1>();
}

Matrix orthonormal_design(Index t, Index p, std::mt19937_64& rng) {
  const Matrix q = Eigen::HouseholderQR<Matrix>(gaussian(t, p, rng)).householderQ() * Matrix::Identity(t, p);
  return q * std::sqrt(static_cast<double>(t));  // X'X/T = I
}

}  // namespace

TEST_CASE("MTB thresholds") {
  MtbConfig cfg;
  cfg.delta1 = 1.5;
  CHECK(cfg.threshold(100, 1) == doctest::Approx(0.005));
  cfg.delta1 = 2.0;
  CHECK(cfg.threshold(50, 1) == doctest::Approx(0.001));
  for (double d : {1.5, 2.0, 3.0}) {
    cfg.delta1 = d;
    for (Index k = 1; k < 40; ++k) CHECK(cfg.threshold(40, k) < cfg.threshold(40, k + 1));
  }
  MtbConfig bad;
  bad.delta1 = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = MtbConfig{};
  bad.p_val = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("MTB matches a brute-force forward-selection oracle") {
  std::mt19937_64 rng(41);
  for (int rep = 0; rep < 40; ++rep) {
    const Index t = 40 + rep, n = 12;
    const Matrix z = gaussian(t, n, rng);
    Vector y = gaussian(t, rng);
    y += 0.8 * z.col(rep % n) - 0.6 * z.col((rep + 5) % n) + 0.3 * z.col((rep + 7) % n);
    for (double d : {1.5, 2.0}) {
      MtbConfig cfg;
      cfg.delta1 = d;
      const SelectionResult r = mtb_select(y, CandidatePool::from_matrix(z), cfg);
      CHECK(r.selected == mtb_oracle(y, z, cfg));
      std::set<Index> seen;
      for (const SelectionStep& s : r.steps) {
        CHECK(seen.insert(s.candidate).second);
        CHECK(s.pvalue <= s.threshold);
      }
    }
  }
}

TEST_CASE("MTB picks a perfect predictor first, then stops") {
  std::mt19937_64 rng(42);
  const Matrix z = gaussian(200, 30, rng);
  const Vector y = z.col(17) + 1e-6 * gaussian(200, rng);
  const SelectionResult r = mtb_select(y, CandidatePool::from_matrix(z), MtbConfig{});
  REQUIRE(!r.selected.empty());
  CHECK(r.selected.front() == 17);
  CHECK(r.selected.size() == 1);
}

TEST_CASE("MTB ties resolve to the lowest index") {
  std::mt19937_64 rng(43);
  Matrix z = gaussian(60, 6, rng);
  z.col(4) = z.col(2);
  const Vector y = z.col(2) + 0.5 * gaussian(60, rng);
  const SelectionResult r = mtb_select(y, CandidatePool::from_matrix(z), MtbConfig{});
  REQUIRE(!r.selected.empty());
  CHECK(r.selected.front() == 2);
}

TEST_CASE("MTB selection is invariant to column rescaling") {
  std::mt19937_64 rng(44);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix z = gaussian(50, 20, rng);
    const Vector y = z.col(3) - z.col(8) + gaussian(50, rng);
    const SelectionResult a = mtb_select(y, CandidatePool::from_matrix(z), MtbConfig{});
    for (Index j = 0; j < z.cols(); ++j) z.col(j) *= 0.01 + 3.0 * j;
    const SelectionResult b = mtb_select(y, CandidatePool::from_matrix(z), MtbConfig{});
    CHECK(a.selected == b.selected);
  }
}

TEST_CASE("MTB null false-selection rate") {
  std::mt19937_64 rng(45);
  const Index reps = 1000;
  Index any = 0;
  for (Index rep = 0; rep < reps; ++rep) {
    const Matrix z = gaussian(100, 50, rng);
    const Vector y = gaussian(100, rng);
    if (!mtb_select(y, CandidatePool::from_matrix(z), MtbConfig{}).selected.empty()) ++any;
  }
  const double rate = static_cast<double>(any) / reps;
  MESSAGE("family-wise false-selection rate " << rate);
  CHECK(rate <= 0.05 + 0.02);
}

TEST_CASE("candidate pool validation") {
  CandidatePool p = CandidatePool::from_matrix(Matrix::Ones(10, 3));
  CHECK_NOTHROW(p.validate());
  p.matrix.col(1).setZero();
  CHECK_THROWS_AS(p.validate(), Error);
  CHECK_THROWS_AS(CandidatePool::from_matrix(Matrix::Ones(4, 3)).validate(), Error);
  try {
    CandidatePool::from_matrix(Matrix(10, 0)).validate();
    FAIL("expected EmptyPool");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyPool);
  }
}

TEST_CASE("coordinate descent equals soft-thresholding under an orthonormal design") {
  std::mt19937_64 rng(46);
  for (int rep = 0; rep < 50; ++rep) {
    const Index t = 60, p = 8;
    const Matrix x = orthonormal_design(t, p, rng);
    const Vector y = x * gaussian(p, rng) + gaussian(t, rng);
    const Vector c = x.transpose() * y / static_cast<double>(t);
    for (double xi : {0.0, 0.05, 0.3, 1.0, 10.0}) {
      const Vector b = coordinate_descent_lasso(y, x, xi).coef;
      for (Index j = 0; j < p; ++j) {
        const double expect = std::copysign(std::max(std::abs(c(j)) - xi, 0.0), c(j));
        CHECK(std::abs(b(j) - expect) < 1e-6);
      }
    }
  }
}

TEST_CASE("unpenalized Lasso is least squares") {
  std::mt19937_64 rng(47);
  const Matrix x = gaussian(80, 6, rng);
  const Vector y = x * gaussian(6, rng) + gaussian(80, rng);
  const Vector b = coordinate_descent_lasso(y, x, 0.0).coef;
  CHECK(max_abs(b - dcp::testing::normal_equations(y, x)) < 1e-6);
}

TEST_CASE("Lasso optimality against random perturbations") {
  std::mt19937_64 rng(48);
  std::normal_distribution<double> eps(0.0, 1e-3);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix x = gaussian(50, 12, rng);
    const Vector y = x.leftCols(3) * Vector::Ones(3) + gaussian(50, rng);
    const double xi = 0.05 * (rep + 1);
    const Vector b = coordinate_descent_lasso(y, x, xi).coef;
    const double best = lasso_objective(y, x, xi, b);
    for (int k = 0; k < 100; ++k) {
      Vector d(12);
      for (Index j = 0; j < 12; ++j) d(j) = eps(rng);
      CHECK(lasso_objective(y, x, xi, b + d) >= best - 1e-12);
    }
  }
}

TEST_CASE("Lasso above the null penalty selects nothing") {
  std::mt19937_64 rng(49);
  const Matrix x = gaussian(40, 10, rng);
  const Vector y = gaussian(40, rng);
  const double xi_max = (x.transpose() * y).cwiseAbs().maxCoeff() / 40.0;
  CHECK(coordinate_descent_lasso(y, x, xi_max * 1.0001).coef.isZero());
  const Matrix u = gaussian(5, 40, rng);
  CHECK(pooled_lasso_fit(u, x, 1e6).isZero());
}

TEST_CASE("homotopy path equals coordinate descent at every grid point") {
  std::mt19937_64 rng(50);
  for (int rep = 0; rep < 20; ++rep) {
    const Index t = 30 + 5 * rep, p = 25;
    Matrix x = gaussian(t, p, rng);
    x.col(3) = 0.7 * x.col(1) + 0.3 * x.col(3);
    const Vector y = x.col(1) - 0.5 * x.col(4) + gaussian(t, rng);
    const Matrix g = x.transpose() * x / static_cast<double>(t);
    const Vector c = x.transpose() * y / static_cast<double>(t);
    const double yy = y.squaredNorm() / static_cast<double>(t);
    const double xi_max = c.cwiseAbs().maxCoeff();
    std::vector<double> grid;
    for (int l = 0; l < 40; ++l) grid.push_back(xi_max * std::pow(1e-3, l / 39.0));
    const LassoPath path = lasso_path_gram(g, c, yy, grid);
    REQUIRE(!path.coefs.empty());
    CHECK(path.coefs.front().isZero());
    for (std::size_t l = 0; l < path.coefs.size(); ++l) {
      LassoOptions tight;
      tight.tolerance = 1e-13;
      const LassoFit cd = lasso_gram(g, c, yy, grid[l], Vector::Zero(p), tight);
      CHECK(max_abs(path.coefs[l] - cd.coef) < 1e-6);
    }
  }
}

TEST_CASE("cross-validated Lasso matches a brute-force fold oracle") {
  std::mt19937_64 rng(51);
  const Index t = 60, p = 15;
  const Matrix x = gaussian(t, p, rng) * 2.0 + Matrix::Constant(t, p, 1.0);
  const Vector y = x.col(0) - x.col(5) + 2.0 * gaussian(t, rng);
  CvOptions opt;
  opt.folds = 5;
  opt.grid_size = 30;
  opt.rule = CvRule::Min;
  const CvLasso cv = CvDesign(x, opt).fit(y);
  REQUIRE(cv.path_length == static_cast<Index>(cv.grid.size()));

  std::vector<double> err(cv.grid.size(), 0.0);
  for (Index f = 0; f < 5; ++f) {
    const Index b = f * t / 5, e = (f + 1) * t / 5;
    std::vector<Index> train;
    for (Index s = 0; s < t; ++s) {
      if (s < b || s >= e) train.push_back(s);
    }
    Matrix xt(static_cast<Index>(train.size()), p);
    Vector yt(static_cast<Index>(train.size()));
    for (std::size_t k = 0; k < train.size(); ++k) {
      xt.row(static_cast<Index>(k)) = x.row(train[k]);
      yt(static_cast<Index>(k)) = y(train[k]);
    }
    const Eigen::RowVectorXd mu = xt.colwise().mean();
    xt.rowwise() -= mu;
    const Eigen::RowVectorXd sd = (xt.colwise().squaredNorm() / static_cast<double>(xt.rows())).cwiseSqrt();
    for (Index j = 0; j < p; ++j) xt.col(j) /= sd(j);
    const double ybar = yt.mean();
    yt.array() -= ybar;
    Matrix xv = x.middleRows(b, e - b);
    xv.rowwise() -= mu;
    for (Index j = 0; j < p; ++j) xv.col(j) /= sd(j);
    const Vector yv = y.segment(b, e - b).array() - ybar;
    LassoOptions tight;
    tight.tolerance = 1e-12;
    for (std::size_t l = 0; l < cv.grid.size(); ++l) {
      const Vector coef = coordinate_descent_lasso(yt, xt, cv.grid[l], tight).coef;
      err[l] += (yv - xv * coef).squaredNorm() / static_cast<double>(t);
    }
  }
  for (std::size_t l = 0; l < err.size(); ++l) CHECK(cv.cv_error[l] == doctest::Approx(err[l]).epsilon(1e-6));
  const auto best = std::min_element(err.begin(), err.end()) - err.begin();
  CHECK(cv.grid_index == best);

  CvOptions one_se = opt;
  one_se.rule = CvRule::OneSe;
  const CvLasso cv1 = CvDesign(x, one_se).fit(y);
  CHECK(cv1.xi >= cv.xi);
  CHECK(cv1.support().size() <= cv.support().size());
}

TEST_CASE("homotopy and coordinate-descent CV agree") {
  std::mt19937_64 rng(52);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix x = gaussian(50, 40, rng);
    const Vector y = x.col(rep) + gaussian(50, rng);
    CvOptions h, c;
    c.path = PathSolver::CoordinateDescent;
    c.solver.tolerance = 1e-12;
    const CvLasso a = CvDesign(x, h).fit(y), b = CvDesign(x, c).fit(y);
    CHECK(a.grid_index == b.grid_index);
    CHECK(a.support() == b.support());
    CHECK(max_abs(a.coef - b.coef) < 1e-5);
  }
}

TEST_CASE("Lasso selection is invariant to column rescaling") {
  std::mt19937_64 rng(53);
  Matrix x = gaussian(60, 20, rng);
  const Vector y = x.col(2) - x.col(9) + gaussian(60, rng);
  const CvLasso a = CvDesign(x).fit(y);
  for (Index j = 0; j < x.cols(); ++j) x.col(j) *= 0.5 + j;
  const CvLasso b = CvDesign(x).fit(y);
  CHECK(a.support() == b.support());
}

TEST_CASE("pooled Lasso equals the stacked-panel problem") {
  std::mt19937_64 rng(54);
  const Index n = 6, t = 40, p = 10;
  const Matrix z = gaussian(t, p, rng) * 3.0;
  Matrix u(n, t);
  for (Index i = 0; i < n; ++i) u.row(i) = (z.col(1) * (1.0 + 0.2 * i) + gaussian(t, rng)).transpose();
  const double xi = 0.2;
  const Vector pooled = pooled_lasso_fit(u, z, xi);

  Matrix zs(n * t, p);
  Vector us(n * t);
  for (Index i = 0; i < n; ++i) {
    zs.middleRows(i * t, t) = z;
    us.segment(i * t, t) = u.row(i).transpose();
  }
  const Eigen::RowVectorXd mu = zs.colwise().mean();
  zs.rowwise() -= mu;
  const Eigen::RowVectorXd sd = (zs.colwise().squaredNorm() / static_cast<double>(n * t)).cwiseSqrt();
  for (Index j = 0; j < p; ++j) zs.col(j) /= sd(j);
  us.array() -= us.mean();
  // (1/NT)||u - Zb||^2 + xi|b| is twice (1/2NT)||u - Zb||^2 + (xi/2)|b|.
  LassoOptions tight;
  tight.tolerance = 1e-13;
  const Vector stacked = coordinate_descent_lasso(us, zs, 0.5 * xi, tight).coef.cwiseQuotient(sd.transpose());
  CHECK(max_abs(pooled - stacked) < 1e-6);

  const SelectionResult r = pooled_lasso(u, CandidatePool::from_matrix(z));
  CHECK(std::find(r.selected.begin(), r.selected.end(), 1) != r.selected.end());
}

TEST_CASE("stability rule") {
  CHECK(stability_retain({1, 0, 2}, 4, 0.25) == std::vector<Index>{0, 2});
  CHECK(stability_retain({0, 0}, 4, 0.0).empty());
  std::mt19937_64 rng(55);
  std::uniform_int_distribution<Index> cnt(0, 40);
  std::vector<Index> counts(30);
  for (auto& c : counts) c = cnt(rng);
  std::size_t last = counts.size() + 1;
  for (double f = 0.0; f <= 1.0; f += 0.05) {
    const auto kept = stability_retain(counts, 40, f);
    CHECK(kept.size() <= last);
    last = kept.size();
  }
}

TEST_CASE("individual Lasso keeps candidates most units choose") {
  std::mt19937_64 rng(56);
  const Index n = 20, t = 80;
  const Matrix z = gaussian(t, 15, rng);
  Matrix u(n, t);
  for (Index i = 0; i < n; ++i) u.row(i) = (z.col(4) + 0.5 * gaussian(t, rng)).transpose();
  const SelectionResult r = individual_lasso(u, CandidatePool::from_matrix(z));
  CHECK(r.frequency(4) == 1.0);
  CHECK(std::find(r.selected.begin(), r.selected.end(), 4) != r.selected.end());
  const SelectionResult strict = individual_lasso(u, CandidatePool::from_matrix(z), 1.0);
  CHECK(strict.selected.size() <= r.selected.size());
}

TEST_CASE("Lasso configuration errors") {
  CvOptions empty;
  empty.grid_size = 0;
  try {
    CvDesign(Matrix::Ones(30, 3), empty);
    FAIL("expected EmptyGrid");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyGrid);
  }
  CHECK_THROWS_AS(coordinate_descent_lasso(Vector::Ones(3), Matrix::Ones(3, 2), -1.0), Error);
}
