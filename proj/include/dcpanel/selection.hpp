#pragma once

// Variable selection over a pool of candidate predictors: multiple testing
// boosting (sequential forward selection with tightening p-value thresholds)
// and cross-validated Lasso baselines, pooled and unit-by-unit.

#include "dcpanel/linalg.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace dcp::selection {

struct CandidatePool {
  Matrix matrix;                    // T_m x n_c
  std::vector<std::string> names;   // n_c labels

  Index periods() const { return matrix.rows(); }
  Index size() const { return matrix.cols(); }
  /// Throws EmptyPool, InvalidInput (non-finite, constant-zero column, T_m < 5) or DimensionMismatch.
  void validate() const;
  /// Pool with names c0, c1, ...
  static CandidatePool from_matrix(Matrix m);
};

struct SelectionStep {
  Index candidate = 0;
  double tstat = 0.0;
  double pvalue = 1.0;
  double threshold = 0.0;
};

struct SelectionResult {
  std::string method;
  std::vector<Index> selected;        // selection order
  std::vector<SelectionStep> steps;   // MTB only
  Vector coefficients;                // Lasso: original-scale coefficients (pooled) or empty
  Vector frequency;                   // i-Lasso: share of units selecting each candidate
  double penalty = std::numeric_limits<double>::quiet_NaN();
};

struct MtbConfig {
  double p_val = 0.05;
  double c1 = 1.0;
  double delta1 = 2.0;
  std::optional<Index> max_steps;   // default min(T_m / 2, n_c)
  bool intercept = true;

  void validate() const;
  /// p_val / (c1 * (pool_size - (pass - 1))^(delta1 - 1)), pass counted from 1.
  double threshold(Index pool_size, Index pass) const;
};

SelectionResult mtb_select(const Vector& target, const CandidatePool& pool, const MtbConfig& config);

// ---------------------------------------------------------------------------
// Lasso

struct LassoOptions {
  double tolerance = 1e-8;   // duality gap relative to y'y/(2T)
  Index max_sweeps = 10000;
  /// When positive: give up (flagging `saturated`) once 100 sweeps have not
  /// converged and the active set has reached this size, the rank of the
  /// design, where the solution stops being identified.
  Index max_active = 0;
};

struct LassoFit {
  Vector coef;
  double gap = 0.0;
  Index sweeps = 0;
  bool converged = false;
  bool saturated = false;
};

/// Minimises (1/2T)||y - Xb||^2 + xi ||b||_1 by cyclic coordinate descent on
/// the columns as given (no centering or scaling). Throws NoConvergence.
LassoFit coordinate_descent_lasso(const Vector& y, const Matrix& x, double xi, const LassoOptions& options = {});

/// Same problem expressed through G = X'X/T, c = X'y/T and yy = y'y/T.
/// `coef` is the warm start and receives the solution. Does not throw on
/// non-convergence; inspect the returned fit.
LassoFit lasso_gram(const Matrix& gram, const Vector& xty, double yy, double xi, Vector coef,
                    const LassoOptions& options = {});

struct LassoPath {
  std::vector<Vector> coefs;   // one per penalty reached, in grid order
  bool saturated = false;      // stopped because the active set reached the design rank
};

/// Exact piecewise-linear Lasso path (homotopy / LARS-lasso) of the Gram
/// problem evaluated at a descending penalty grid. Stops early when the fit
/// explains 99.9% of yy or the active set can no longer grow (design rank).
LassoPath lasso_path_gram(const Matrix& gram, const Vector& xty, double yy, const std::vector<double>& grid);

enum class PathSolver {
  Homotopy,            // exact path
  CoordinateDescent,   // warm-started coordinate descent at each penalty
};

enum class CvRule {
  Min,     // penalty with the smallest mean validation error
  OneSe,   // largest penalty within one standard error of that minimum
};

struct CvOptions {
  Index folds = 10;
  CvRule rule = CvRule::OneSe;
  PathSolver path = PathSolver::Homotopy;
  Index grid_size = 100;
  double grid_ratio = 1e-4;
  LassoOptions solver;
};

struct CvLasso {
  Vector coef;                 // original scale
  double intercept = 0.0;
  double xi = 0.0;             // chosen penalty (standardized scale)
  Index grid_index = 0;
  std::vector<double> grid;
  std::vector<double> cv_error;   // fold-size weighted mean validation MSE
  std::vector<double> cv_sd;      // its standard error across folds
  Index nonconverged = 0;      // path fits that hit the sweep cap
  Index path_length = 0;       // penalties fitted before the path saturated

  std::vector<Index> support() const;
};

/// Standardizes X internally (per training fold), centers y, and picks the
/// penalty minimising the K-fold (contiguous blocks) validation error.
class CvDesign {
 public:
  CvDesign(const Matrix& x, const CvOptions& options = {});
  CvLasso fit(const Vector& y) const;
  Index periods() const { return x_.rows(); }
  Index size() const { return x_.cols(); }

 private:
  struct Fold {
    Index begin = 0, end = 0;           // validation rows [begin, end)
    Vector mean, scale;                 // training-row standardization
    Matrix gram;                        // standardized training X'X / T_train
    Matrix valid;                       // standardized validation rows
  };
  Fold make_fold(Index begin, Index end) const;

  Matrix x_;
  CvOptions options_;
  Fold full_;
  std::vector<Fold> folds_;
};

/// Stacked-panel Lasso: (1/NT) sum_i ||u_i - Z b||^2 + xi ||b||_1 with xi by CV.
SelectionResult pooled_lasso(const Matrix& targets, const CandidatePool& pool, const CvOptions& options = {});

/// Stacked-panel Lasso at a fixed penalty (same normalization as pooled_lasso),
/// Z standardized internally; returns original-scale coefficients.
Vector pooled_lasso_fit(const Matrix& targets, const Matrix& pool, double xi, const LassoOptions& options = {});

/// One CV Lasso per row of `targets`; keeps candidates chosen by at least
/// retain_fraction * N units.
SelectionResult individual_lasso(const Matrix& targets, const CandidatePool& pool, double retain_fraction = 0.25,
                                 const CvOptions& options = {});

/// Candidates whose selection count reaches retain_fraction * units.
std::vector<Index> stability_retain(const std::vector<Index>& counts, Index units, double retain_fraction);

}  // namespace dcp::selection
