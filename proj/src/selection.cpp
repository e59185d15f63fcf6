#include "dcpanel/selection.hpp"

#include "dcpanel/error.hpp"
#include "dcpanel/kernels.hpp"
#include "dcpanel/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dcp::selection {

void CandidatePool::validate() const {
  if (matrix.cols() == 0) fail(ErrorCode::EmptyPool, "candidate pool has no columns");
  if (!names.empty() && static_cast<Index>(names.size()) != matrix.cols()) {
    fail(ErrorCode::DimensionMismatch, "candidate names do not match pool width");
  }
  if (matrix.rows() < 5) fail(ErrorCode::InvalidInput, "candidate pool needs at least 5 periods");
  if (!matrix.allFinite()) fail(ErrorCode::InvalidInput, "candidate pool contains non-finite values");
  for (Index j = 0; j < matrix.cols(); ++j) {
    if (matrix.col(j).cwiseAbs().maxCoeff() == 0.0) {
      fail(ErrorCode::InvalidInput, "candidate column " + (names.empty() ? std::to_string(j) : names[j]) +
                                        " is identically zero");
    }
  }
}

CandidatePool CandidatePool::from_matrix(Matrix m) {
  CandidatePool pool;
  pool.names.reserve(static_cast<std::size_t>(m.cols()));
  for (Index j = 0; j < m.cols(); ++j) pool.names.push_back("c" + std::to_string(j));
  pool.matrix = std::move(m);
  return pool;
}

void MtbConfig::validate() const {
  if (!(p_val > 0.0 && p_val < 1.0)) fail(ErrorCode::InvalidConfig, "p_val must lie in (0, 1)");
  if (!(c1 > 0.0)) fail(ErrorCode::InvalidConfig, "c1 must be positive");
  if (!(delta1 > 1.0)) fail(ErrorCode::InvalidConfig, "delta1 must exceed 1");
  if (max_steps && *max_steps < 0) fail(ErrorCode::InvalidConfig, "max_steps must be non-negative");
}

double MtbConfig::threshold(Index pool_size, Index pass) const {
  const double remaining = static_cast<double>(pool_size - (pass - 1));
  if (!(remaining > 0.0)) fail(ErrorCode::InvalidConfig, "pass exceeds the pool size");
  return p_val / (c1 * std::pow(remaining, delta1 - 1.0));
}

SelectionResult mtb_select(const Vector& target, const CandidatePool& pool, const MtbConfig& config) {
  pool.validate();
  config.validate();
  const Index t = pool.periods();
  const Index n_c = pool.size();
  if (target.size() != t) fail(ErrorCode::DimensionMismatch, "target length differs from the pool");
  if (!target.allFinite()) fail(ErrorCode::InvalidInput, "target contains non-finite values");

  Index max_steps = std::min(t / 2, n_c);
  if (config.max_steps) max_steps = std::min(*config.max_steps, n_c);

  // Frisch-Waugh: keep target and candidates residualized on [1, selected].
  Vector e = target;
  Matrix z = pool.matrix;
  std::vector<double> ref(static_cast<std::size_t>(n_c));
  for (Index j = 0; j < n_c; ++j) ref[static_cast<std::size_t>(j)] = z.col(j).squaredNorm();
  if (config.intercept) {
    e.array() -= e.mean();
    z.rowwise() -= z.colwise().mean();
  }

  SelectionResult out;
  out.method = "PCA-MTB";
  std::vector<unsigned char> skip(static_cast<std::size_t>(n_c), 0);
  Vector tstats;
  for (Index pass = 1; pass <= max_steps; ++pass) {
    const Index params = static_cast<Index>(out.selected.size()) + (config.intercept ? 1 : 0) + 1;
    if (t <= params) {
      fail(ErrorCode::DegreesOfFreedomExhausted,
           "T_m=" + std::to_string(t) + " leaves no degrees of freedom at pass " + std::to_string(pass));
    }
    const kernels::CandidateInputs in{e, z, skip, ref, params};
    kernels::candidate_tstats(in, tstats);

    Index best = -1;
    double best_abs = 0.0;
    for (Index j = 0; j < n_c; ++j) {
      const double a = std::abs(tstats(j));
      if (a > best_abs) {
        best_abs = a;
        best = j;
      }
    }
    if (best < 0) break;
    const double p = stats::two_sided_p(tstats(best));
    const double threshold = config.threshold(n_c, pass);
    if (!(p <= threshold)) break;

    out.selected.push_back(best);
    out.steps.push_back({best, tstats(best), p, threshold});
    skip[static_cast<std::size_t>(best)] = 1;

    const Vector q = z.col(best).normalized();
    e.noalias() -= q * q.dot(e);
    const Eigen::RowVectorXd proj = q.transpose() * z;
    z.noalias() -= q * proj;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lasso

namespace {

inline double soft_threshold(double x, double xi) {
  if (x > xi) return x - xi;
  if (x < -xi) return x + xi;
  return 0.0;
}

struct GapInfo {
  double gap;
  double primal;
};

// gram = X'X/T, grad = X'r/T = c - G b, yy = y'y/T.
GapInfo duality_gap(const Vector& xty, double yy, double xi, const Vector& b, const Vector& grad) {
  const double cb = xty.dot(b);
  const double bgb = cb - grad.dot(b);
  const double rr = std::max(0.0, yy - 2.0 * cb + bgb);
  const double ry = yy - cb;
  const double l1 = b.lpNorm<1>();
  const double primal = 0.5 * rr + xi * l1;
  const double gmax = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
  const double s = gmax > xi ? xi / gmax : 1.0;
  const double dual = s * ry - 0.5 * s * s * rr;
  return {primal - dual, primal};
}

bool kkt_satisfied(const Matrix& gram, const Vector& b, const Vector& grad, double xi, double eps) {
  for (Index j = 0; j < b.size(); ++j) {
    if (gram(j, j) <= 0.0) continue;
    if (b(j) != 0.0) {
      if (std::abs(grad(j) - std::copysign(xi, b(j))) > eps) return false;
    } else if (std::abs(grad(j)) > xi + eps) {
      return false;
    }
  }
  return true;
}

// One cyclic pass over `coords`; returns the largest scaled coefficient change.
double sweep(const Matrix& gram, double xi, Vector& b, Vector& grad, const std::vector<Index>& coords) {
  double max_change = 0.0;
  for (Index j : coords) {
    const double gjj = gram(j, j);
    if (gjj <= 0.0) continue;
    const double old = b(j);
    const double updated = soft_threshold(grad(j) + gjj * old, xi) / gjj;
    const double delta = updated - old;
    if (delta == 0.0) continue;
    b(j) = updated;
    grad.noalias() -= gram.col(j) * delta;
    max_change = std::max(max_change, std::abs(delta) * std::sqrt(gjj));
  }
  return max_change;
}

enum class StepOutcome { Solved, Partial, Failed };

// Minimiser of the quadratic on the current orthant face: G_AA b_A = c_A - xi s_A.
// If it keeps every sign the step is exact. Otherwise move along the segment
// towards it up to the first sign change (the objective decreases along that
// stretch) and drop the coordinates that reach zero.
StepOutcome active_set_step(const Matrix& gram, const Vector& xty, double xi, const std::vector<Index>& active,
                            Vector& b, Vector& grad) {
  const Index m = static_cast<Index>(active.size());
  Matrix g(m, m);
  Vector rhs(m);
  for (Index a = 0; a < m; ++a) {
    const Index ja = active[static_cast<std::size_t>(a)];
    rhs(a) = xty(ja) - std::copysign(xi, b(ja));
    for (Index c = 0; c < m; ++c) g(a, c) = gram(ja, active[static_cast<std::size_t>(c)]);
  }
  const Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success) return StepOutcome::Failed;
  const Vector diag = llt.matrixLLT().diagonal();
  if (diag.minCoeff() <= 1e-7 * diag.maxCoeff()) return StepOutcome::Failed;
  const Vector sol = llt.solve(rhs);

  double step = 1.0;
  for (Index a = 0; a < m; ++a) {
    const double old = b(active[static_cast<std::size_t>(a)]);
    if (!(sol(a) * old > 0.0)) step = std::min(step, old / (old - sol(a)));
  }
  for (Index a = 0; a < m; ++a) {
    const Index ja = active[static_cast<std::size_t>(a)];
    const double old = b(ja);
    double updated = step == 1.0 ? sol(a) : old + step * (sol(a) - old);
    if (step < 1.0 && !(sol(a) * old > 0.0) && old / (old - sol(a)) <= step) updated = 0.0;
    const double delta = updated - old;
    if (delta == 0.0) continue;
    b(ja) = updated;
    grad.noalias() -= gram.col(ja) * delta;
  }
  return step == 1.0 ? StepOutcome::Solved : StepOutcome::Partial;
}

// Share of centered variation explained by b reaches 99.9%.
bool saturated(const Matrix& gram, const Vector& xty, double yy, const Vector& b) {
  if (!(yy > 0.0)) return true;
  const double cb = xty.dot(b);
  const double rr = yy - 2.0 * cb + b.dot(gram * b);
  return rr <= 1e-3 * yy;
}

}  // namespace

LassoFit lasso_gram(const Matrix& gram, const Vector& xty, double yy, double xi, Vector coef,
                    const LassoOptions& options) {
  const Index p = gram.cols();
  if (gram.rows() != p || xty.size() != p) fail(ErrorCode::DimensionMismatch, "Gram system shapes differ");
  if (!(xi >= 0.0)) fail(ErrorCode::InvalidConfig, "Lasso penalty must be non-negative");
  if (coef.size() != p) coef = Vector::Zero(p);

  LassoFit fit;
  Vector grad = xty - gram * coef;
  const double scale = std::max(0.5 * yy, std::numeric_limits<double>::min());
  const double kkt_eps = 1e-12 * std::max(1.0, std::sqrt(yy));
  std::vector<Index> all(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) all[static_cast<std::size_t>(j)] = j;
  std::vector<Index> active, signature, previous;

  auto converged = [&](double max_change) {
    if (xi > 0.0) {
      fit.gap = duality_gap(xty, yy, xi, coef, grad).gap;
      return fit.gap <= options.tolerance * scale;
    }
    // Without a penalty the dual point degenerates; fall back to stationarity.
    fit.gap = duality_gap(xty, yy, xi, coef, grad).gap;
    return max_change <= kkt_eps && kkt_satisfied(gram, coef, grad, xi, kkt_eps * 10.0);
  };

  while (fit.sweeps < options.max_sweeps) {
    const double change = sweep(gram, xi, coef, grad, all);
    ++fit.sweeps;
    if (converged(change)) {
      fit.converged = true;
      break;
    }
    active.clear();
    for (Index j = 0; j < p; ++j) {
      if (coef(j) != 0.0) active.push_back(j);
    }
    if (active.empty()) continue;
    if (options.max_active > 0 && fit.sweeps >= 100 && static_cast<Index>(active.size()) >= options.max_active) {
      fit.saturated = true;
      break;
    }
    // With a settled sign pattern the solution solves G_AA b_A = c_A - xi s_A;
    // take that step when it keeps the signs (it then cannot raise the objective).
    // Signed active set; the exact step pays off once it stops changing.
    signature.clear();
    for (Index j : active) signature.push_back(coef(j) > 0.0 ? j + 1 : -(j + 1));
    const bool settled = signature == previous;
    std::swap(signature, previous);
    if (settled) {
      const StepOutcome step = active_set_step(gram, xty, xi, active, coef, grad);
      if (step == StepOutcome::Solved && xi > 0.0 && converged(std::numeric_limits<double>::infinity())) {
        fit.converged = true;
        break;
      }
      if (step != StepOutcome::Failed) continue;
    }
    // Otherwise iterate on the active set until it settles, then re-check everything.
    for (Index inner = 0; inner < 20 && fit.sweeps < options.max_sweeps; ++inner) {
      const double c = sweep(gram, xi, coef, grad, active);
      ++fit.sweeps;
      if (c <= 1e-3 * std::sqrt(options.tolerance * scale)) break;
    }
  }
  if (!fit.converged) fit.gap = duality_gap(xty, yy, xi, coef, grad).gap;
  fit.coef = std::move(coef);
  return fit;
}

LassoFit coordinate_descent_lasso(const Vector& y, const Matrix& x, double xi, const LassoOptions& options) {
  const Index t = x.rows();
  if (y.size() != t) fail(ErrorCode::DimensionMismatch, "y length differs from X rows");
  if (t == 0 || x.cols() == 0) fail(ErrorCode::InvalidInput, "empty Lasso design");
  const double inv_t = 1.0 / static_cast<double>(t);
  const Matrix gram = x.transpose() * x * inv_t;
  const Vector xty = x.transpose() * y * inv_t;
  LassoFit fit = lasso_gram(gram, xty, y.squaredNorm() * inv_t, xi, Vector::Zero(x.cols()), options);
  if (!fit.converged) {
    fail(ErrorCode::NoConvergence, "coordinate descent stopped after " + std::to_string(fit.sweeps) +
                                       " sweeps with duality gap " + std::to_string(fit.gap));
  }
  return fit;
}

namespace {

// Warm-started coordinate descent along the grid with the same stopping rules
// as the homotopy path.
LassoPath cd_path(const Matrix& gram, const Vector& xty, double yy, const std::vector<double>& grid,
                  Index max_active, const LassoOptions& options, Index& nonconverged) {
  LassoOptions solver = options;
  solver.max_active = max_active;
  LassoPath out;
  Vector b = Vector::Zero(xty.size());
  for (double xi : grid) {
    LassoFit fit = lasso_gram(gram, xty, yy, xi, b, solver);
    if (fit.saturated) {
      out.saturated = true;
      break;
    }
    if (!fit.converged) ++nonconverged;
    b = std::move(fit.coef);
    out.coefs.push_back(b);
    if (saturated(gram, xty, yy, b)) break;
  }
  return out;
}

}  // namespace

LassoPath lasso_path_gram(const Matrix& gram, const Vector& xty, double yy, const std::vector<double>& grid) {
  const Index p = gram.cols();
  if (gram.rows() != p || xty.size() != p) fail(ErrorCode::DimensionMismatch, "Gram system shapes differ");
  LassoPath out;
  const std::size_t g = grid.size();
  std::size_t next = 0;
  Vector b = Vector::Zero(p);
  Vector corr = xty;   // X'r/T
  double lambda = p ? corr.cwiseAbs().maxCoeff() : 0.0;

  // With G b = c - corr the residual energy is yy - c'b - corr'b.
  auto record = [&](const Vector& coef, const Vector& grad) {
    out.coefs.push_back(coef);
    return yy - xty.dot(coef) - grad.dot(coef) <= 1e-3 * yy;
  };
  while (next < g && grid[next] >= lambda) {
    if (record(b, corr)) return out;
    ++next;
  }
  if (next == g || !(lambda > 0.0)) return out;

  std::vector<Index> active;
  std::vector<char> in_active(static_cast<std::size_t>(p), 0);
  Matrix chol(0, 0);   // lower Cholesky factor of G_AA

  // Appends j to the active set; false when G_AA would become singular.
  auto add = [&](Index j) {
    const Index m = static_cast<Index>(active.size());
    Vector v(m);
    for (Index a = 0; a < m; ++a) v(a) = gram(active[static_cast<std::size_t>(a)], j);
    Vector w = v;
    if (m > 0) chol.triangularView<Eigen::Lower>().solveInPlace(w);
    const double d2 = gram(j, j) - w.squaredNorm();
    if (!(d2 > 1e-10 * gram(j, j))) return false;
    Matrix grown = Matrix::Zero(m + 1, m + 1);
    grown.topLeftCorner(m, m) = chol;
    grown.block(m, 0, 1, m) = w.transpose();
    grown(m, m) = std::sqrt(d2);
    chol = std::move(grown);
    active.push_back(j);
    in_active[static_cast<std::size_t>(j)] = 1;
    return true;
  };
  // Removes active position k from the factor with Givens rotations.
  auto remove = [&](Index k) {
    const Index m = static_cast<Index>(active.size());
    Matrix l(m - 1, m);
    l.topRows(k) = chol.topRows(k);
    l.bottomRows(m - 1 - k) = chol.bottomRows(m - 1 - k);
    for (Index c = k; c < m - 1; ++c) {
      const double a = l(c, c), e = l(c, c + 1);
      const double r = std::hypot(a, e);
      if (r == 0.0) continue;
      const double cs = a / r, sn = e / r;
      for (Index i = c; i < m - 1; ++i) {
        const double u = l(i, c), v = l(i, c + 1);
        l(i, c) = cs * u + sn * v;
        l(i, c + 1) = -sn * u + cs * v;
      }
    }
    chol = l.leftCols(m - 1).triangularView<Eigen::Lower>();
    in_active[static_cast<std::size_t>(active[static_cast<std::size_t>(k)])] = 0;
    active.erase(active.begin() + k);
  };

  {
    Index first = 0;
    for (Index j = 1; j < p; ++j) {
      if (std::abs(corr(j)) > std::abs(corr(first))) first = j;
    }
    if (!add(first)) {
      out.saturated = true;
      return out;
    }
  }

  Index just_dropped = -1;
  const double tiny = 1e-14;
  while (next < g) {
    const Index m = static_cast<Index>(active.size());
    Vector sign(m);
    for (Index a = 0; a < m; ++a) sign(a) = corr(active[static_cast<std::size_t>(a)]) >= 0.0 ? 1.0 : -1.0;
    Vector dir = sign;
    chol.triangularView<Eigen::Lower>().solveInPlace(dir);
    chol.transpose().triangularView<Eigen::Upper>().solveInPlace(dir);

    Vector slope = Vector::Zero(p);   // d corr / d gamma = -slope
    for (Index a = 0; a < m; ++a) slope.noalias() += gram.col(active[static_cast<std::size_t>(a)]) * dir(a);

    double gamma = lambda;
    Index join = -1, drop = -1;
    for (Index j = 0; j < p; ++j) {
      if (in_active[static_cast<std::size_t>(j)] || gram(j, j) <= 0.0) continue;
      // A variable just dropped sits on the boundary; only a real crossing brings it back.
      const double min_step = (j == just_dropped ? 1e-9 : tiny) * lambda;
      const double cj = corr(j), aj = slope(j);
      if (1.0 - aj > tiny) {
        const double gj = (lambda - cj) / (1.0 - aj);
        if (gj > min_step && gj < gamma) { gamma = gj; join = j; }
      }
      if (1.0 + aj > tiny) {
        const double gj = (lambda + cj) / (1.0 + aj);
        if (gj > min_step && gj < gamma) { gamma = gj; join = j; }
      }
    }
    for (Index a = 0; a < m; ++a) {
      const Index j = active[static_cast<std::size_t>(a)];
      if (dir(a) == 0.0 || b(j) == 0.0) continue;
      const double ga = -b(j) / dir(a);
      if (ga > tiny * lambda && ga < gamma) { gamma = ga; drop = a; join = -1; }
    }

    // Grid penalties passed on this linear segment.
    while (next < g && grid[next] >= lambda - gamma) {
      Vector at = b;
      const double h = lambda - grid[next];
      for (Index a = 0; a < m; ++a) at(active[static_cast<std::size_t>(a)]) += h * dir(a);
      ++next;
      if (record(at, corr - h * slope)) return out;
    }
    if (next == g) break;

    for (Index a = 0; a < m; ++a) b(active[static_cast<std::size_t>(a)]) += gamma * dir(a);
    corr.noalias() -= gamma * slope;
    lambda -= gamma;
    just_dropped = -1;
    if (drop >= 0) {
      const Index j = active[static_cast<std::size_t>(drop)];
      b(j) = 0.0;
      remove(drop);
      just_dropped = j;
      if (active.empty()) {
        // Restart from the largest correlation.
        Index first = -1;
        for (Index q = 0; q < p; ++q) {
          if (q != j && (first < 0 || std::abs(corr(q)) > std::abs(corr(first)))) first = q;
        }
        if (first < 0 || !add(first)) { out.saturated = true; break; }
      }
    } else if (join >= 0) {
      if (!add(join)) {
        out.saturated = true;
        break;
      }
    } else {
      break;   // lambda reached zero
    }
  }
  return out;
}

std::vector<Index> CvLasso::support() const {
  std::vector<Index> out;
  for (Index j = 0; j < coef.size(); ++j) {
    if (coef(j) != 0.0) out.push_back(j);
  }
  return out;
}

CvDesign::Fold CvDesign::make_fold(Index begin, Index end) const {
  const Index t = x_.rows();
  const Index p = x_.cols();
  const Index n_train = t - (end - begin);
  Fold f;
  f.begin = begin;
  f.end = end;
  Matrix train(n_train, p);
  train.topRows(begin) = x_.topRows(begin);
  train.bottomRows(t - end) = x_.bottomRows(t - end);
  f.mean = train.colwise().mean().transpose();
  train.rowwise() -= f.mean.transpose();
  f.scale = (train.colwise().squaredNorm() / static_cast<double>(n_train)).cwiseSqrt().transpose();
  for (Index j = 0; j < p; ++j) {
    const double s = f.scale(j);
    f.scale(j) = s > 1e-12 * std::max(1.0, std::abs(f.mean(j))) ? s : 0.0;
    if (f.scale(j) > 0.0) train.col(j) /= f.scale(j);
    else train.col(j).setZero();
  }
  f.gram = train.transpose() * train / static_cast<double>(n_train);
  if (end > begin) {
    f.valid = x_.middleRows(begin, end - begin);
    f.valid.rowwise() -= f.mean.transpose();
    for (Index j = 0; j < p; ++j) {
      if (f.scale(j) > 0.0) f.valid.col(j) /= f.scale(j);
      else f.valid.col(j).setZero();
    }
  }
  return f;
}

CvDesign::CvDesign(const Matrix& x, const CvOptions& options) : x_(x), options_(options) {
  const Index t = x.rows();
  if (x.cols() == 0) fail(ErrorCode::EmptyPool, "Lasso design has no columns");
  if (options.grid_size < 1) fail(ErrorCode::EmptyGrid, "penalty grid is empty");
  if (!(options.grid_ratio > 0.0 && options.grid_ratio < 1.0)) {
    fail(ErrorCode::InvalidConfig, "grid_ratio must lie in (0, 1)");
  }
  const Index k = std::min(options.folds, t);
  if (k < 2) fail(ErrorCode::InvalidConfig, "cross-validation needs at least 2 folds");
  if (t < 2 * k) fail(ErrorCode::SampleTooShort, "too few periods for the requested folds");
  full_ = make_fold(0, 0);
  folds_.reserve(static_cast<std::size_t>(k));
  for (Index f = 0; f < k; ++f) folds_.push_back(make_fold(f * t / k, (f + 1) * t / k));
}

CvLasso CvDesign::fit(const Vector& y) const {
  const Index t = x_.rows();
  const Index p = x_.cols();
  if (y.size() != t) fail(ErrorCode::DimensionMismatch, "Lasso target length differs from the design");

  auto moments = [&](const Fold& f, Vector& xty, double& yy, double& ybar) {
    const Index n_train = t - (f.end - f.begin);
    ybar = (y.head(f.begin).sum() + y.tail(t - f.end).sum()) / static_cast<double>(n_train);
    xty.setZero(p);
    yy = 0.0;
    for (Index s = 0; s < t; ++s) {
      if (s >= f.begin && s < f.end) continue;
      const double yc = y(s) - ybar;
      yy += yc * yc;
      for (Index j = 0; j < p; ++j) {
        if (f.scale(j) > 0.0) xty(j) += (x_(s, j) - f.mean(j)) / f.scale(j) * yc;
      }
    }
    xty /= static_cast<double>(n_train);
    yy /= static_cast<double>(n_train);
  };

  CvLasso out;
  Vector xty_full;
  double yy_full = 0.0, ybar_full = 0.0;
  moments(full_, xty_full, yy_full, ybar_full);
  const double xi_max = xty_full.cwiseAbs().maxCoeff();
  const Index g = options_.grid_size;
  out.grid.resize(static_cast<std::size_t>(g));
  for (Index l = 0; l < g; ++l) {
    const double frac = g == 1 ? 0.0 : static_cast<double>(l) / static_cast<double>(g - 1);
    out.grid[static_cast<std::size_t>(l)] = xi_max * std::pow(options_.grid_ratio, frac);
  }
  out.coef = Vector::Zero(p);
  out.intercept = ybar_full;
  if (!(xi_max > 0.0)) {
    out.xi = 0.0;
    return out;
  }

  // Full-data path first; like glmnet, stop once the fit explains 99.9% of
  // the centered variation, and restrict the folds to the same penalties.
  auto trace = [&](const Fold& f, const Vector& xty, double yy, const std::vector<double>& grid, Index rows) {
    if (options_.path == PathSolver::Homotopy) return lasso_path_gram(f.gram, xty, yy, grid);
    return cd_path(f.gram, xty, yy, grid, rows - 1, options_.solver, out.nonconverged);
  };
  std::vector<Vector> path = trace(full_, xty_full, yy_full, out.grid, t).coefs;
  if (path.empty()) path.push_back(Vector::Zero(p));
  const Index used = static_cast<Index>(path.size());
  out.path_length = used;
  out.grid.resize(static_cast<std::size_t>(used));
  out.cv_error.assign(static_cast<std::size_t>(used), 0.0);
  out.cv_sd.assign(static_cast<std::size_t>(used), 0.0);
  const Index k = static_cast<Index>(folds_.size());
  Matrix fold_mse(k, used);

  for (Index fi = 0; fi < k; ++fi) {
    const Fold& f = folds_[static_cast<std::size_t>(fi)];
    Vector xty;
    double yy = 0.0, ybar = 0.0;
    moments(f, xty, yy, ybar);
    const Index nv = f.end - f.begin;
    const Vector yv = y.segment(f.begin, nv).array() - ybar;
    // Penalties beyond a fold's saturation point reuse its last fit.
    const std::vector<Vector> fold_path = trace(f, xty, yy, out.grid, t - nv).coefs;
    const Vector zero = Vector::Zero(p);
    for (Index l = 0; l < used; ++l) {
      const Vector& b = fold_path.empty() ? zero
                                          : fold_path[std::min(static_cast<std::size_t>(l), fold_path.size() - 1)];
      fold_mse(fi, l) = (yv - f.valid * b).squaredNorm() / static_cast<double>(nv);
    }
  }

  for (Index l = 0; l < used; ++l) {
    double mean = 0.0;
    for (Index fi = 0; fi < k; ++fi) {
      const Fold& f = folds_[static_cast<std::size_t>(fi)];
      mean += static_cast<double>(f.end - f.begin) * fold_mse(fi, l);
    }
    mean /= static_cast<double>(t);
    double var = 0.0;
    for (Index fi = 0; fi < k; ++fi) {
      const Fold& f = folds_[static_cast<std::size_t>(fi)];
      const double d = fold_mse(fi, l) - mean;
      var += static_cast<double>(f.end - f.begin) * d * d;
    }
    var /= static_cast<double>(t);
    out.cv_error[static_cast<std::size_t>(l)] = mean;
    out.cv_sd[static_cast<std::size_t>(l)] = std::sqrt(var / static_cast<double>(k - 1));
  }

  Index best = 0;
  for (Index l = 1; l < used; ++l) {
    if (out.cv_error[static_cast<std::size_t>(l)] < out.cv_error[static_cast<std::size_t>(best)]) best = l;
  }
  if (options_.rule == CvRule::OneSe) {
    const double limit = out.cv_error[static_cast<std::size_t>(best)] + out.cv_sd[static_cast<std::size_t>(best)];
    for (Index l = 0; l <= best; ++l) {
      if (out.cv_error[static_cast<std::size_t>(l)] <= limit) {
        best = l;
        break;
      }
    }
  }
  out.grid_index = best;
  out.xi = out.grid[static_cast<std::size_t>(best)];
  const Vector& b = path[static_cast<std::size_t>(best)];
  for (Index j = 0; j < p; ++j) {
    out.coef(j) = full_.scale(j) > 0.0 ? b(j) / full_.scale(j) : 0.0;
    out.intercept -= out.coef(j) * full_.mean(j);
  }
  return out;
}

SelectionResult pooled_lasso(const Matrix& targets, const CandidatePool& pool, const CvOptions& options) {
  pool.validate();
  if (targets.cols() != pool.periods()) fail(ErrorCode::DimensionMismatch, "targets and pool differ in length");
  if (targets.rows() < 1) fail(ErrorCode::InvalidInput, "no target series");
  // The stacked objective equals (1/T)||u_bar - Z b||^2 plus a b-free constant,
  // and the same holds fold by fold, so CV on the cross-sectional mean with
  // half the penalty selects the same model.
  const Vector mean = targets.colwise().mean().transpose();
  const CvLasso cv = CvDesign(pool.matrix, options).fit(mean);
  SelectionResult out;
  out.method = "p-Lasso";
  out.selected = cv.support();
  out.coefficients = cv.coef;
  out.penalty = 2.0 * cv.xi;
  return out;
}

Vector pooled_lasso_fit(const Matrix& targets, const Matrix& pool, double xi, const LassoOptions& options) {
  const Index t = pool.rows();
  if (targets.cols() != t) fail(ErrorCode::DimensionMismatch, "targets and pool differ in length");
  const Vector ybar = targets.colwise().mean().transpose();
  const Vector yc = ybar.array() - ybar.mean();
  Matrix z = pool.rowwise() - pool.colwise().mean();
  const Vector scale = (z.colwise().squaredNorm() / static_cast<double>(t)).cwiseSqrt().transpose();
  for (Index j = 0; j < z.cols(); ++j) {
    if (scale(j) > 0.0) z.col(j) /= scale(j);
  }
  const double inv_t = 1.0 / static_cast<double>(t);
  const Matrix gram = z.transpose() * z * inv_t;
  const Vector xty = z.transpose() * yc * inv_t;
  LassoFit fit = lasso_gram(gram, xty, yc.squaredNorm() * inv_t, 0.5 * xi, Vector::Zero(z.cols()), options);
  if (!fit.converged) fail(ErrorCode::NoConvergence, "pooled Lasso did not converge");
  Vector coef(z.cols());
  for (Index j = 0; j < z.cols(); ++j) coef(j) = scale(j) > 0.0 ? fit.coef(j) / scale(j) : 0.0;
  return coef;
}

std::vector<Index> stability_retain(const std::vector<Index>& counts, Index units, double retain_fraction) {
  if (!(retain_fraction >= 0.0 && retain_fraction <= 1.0)) {
    fail(ErrorCode::InvalidConfig, "retain_fraction must lie in [0, 1]");
  }
  const double needed = retain_fraction * static_cast<double>(units);
  std::vector<Index> out;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    // "at least" the fraction; absorb rounding in fraction * N.
    if (counts[j] > 0 && static_cast<double>(counts[j]) >= needed - 1e-9) out.push_back(static_cast<Index>(j));
  }
  return out;
}

SelectionResult individual_lasso(const Matrix& targets, const CandidatePool& pool, double retain_fraction,
                                 const CvOptions& options) {
  pool.validate();
  if (targets.cols() != pool.periods()) fail(ErrorCode::DimensionMismatch, "targets and pool differ in length");
  const Index n = targets.rows();
  if (n < 1) fail(ErrorCode::InvalidInput, "no target series");
  const CvDesign design(pool.matrix, options);
  std::vector<std::vector<Index>> supports(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic)
  for (Index i = 0; i < n; ++i) {
    supports[static_cast<std::size_t>(i)] = design.fit(targets.row(i).transpose()).support();
  }
  std::vector<Index> counts(static_cast<std::size_t>(pool.size()), 0);
  for (const auto& s : supports) {
    for (Index j : s) ++counts[static_cast<std::size_t>(j)];
  }
  SelectionResult out;
  out.method = "i-Lasso";
  out.selected = stability_retain(counts, n, retain_fraction);
  out.frequency.resize(pool.size());
  for (Index j = 0; j < pool.size(); ++j) {
    out.frequency(j) = static_cast<double>(counts[static_cast<std::size_t>(j)]) / static_cast<double>(n);
  }
  return out;
}

}  // namespace dcp::selection
