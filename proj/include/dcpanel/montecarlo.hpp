#pragma once

// Simulation harness for the selection methods: factor-panel generator with
// pseudo-signals, confusion-matrix metrics, and the (design cell x method)
// experiment grid with deterministic per-replication random substreams.

#include "dcpanel/linalg.hpp"
#include "dcpanel/selection.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace dcp::mc {

using Rng = std::mt19937_64;

struct DgpConfig {
  Index r = 2;       // true signals
  Index n = 50;      // extra factors (the first r are pseudo-signals)
  Index T = 50;
  Index N = 50;
  double rho = 0.5;
  double pi = 0.5;
  double phi = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  Index pool_size() const { return r + n; }
};

struct DgpDraw {
  Matrix u;                        // N x T
  Matrix g;                        // T x r
  Matrix loadings;                 // N x r
  selection::CandidatePool pool;   // T x (r + n): [G, F]
};

/// Generator for replication `rep` of design cell `cell` under a root seed.
Rng substream(std::uint64_t seed, std::uint64_t cell, std::uint64_t rep);

DgpDraw generate_dgp(const DgpConfig& config, Rng& rng);
/// Convenience: draws from substream(config.seed, 0, 0).
DgpDraw generate_dgp(const DgpConfig& config);

struct MetricReport {
  Index tp = 0, fp = 0, tn = 0, fn = 0;
  double mcc = 0.0, f1 = 0.0, tpr = 0.0, fpr = 0.0, tdr = 0.0, fdr = 0.0;
  Index model_size = 0;
};

/// Indices [0, r) are the true set.
MetricReport score_selection(const std::vector<Index>& selected, Index r, Index pool_size);

enum class Method { PcaMtb, PLasso, ILasso };
std::string method_name(Method m);
Method parse_method(const std::string& name);

struct MethodOptions {
  selection::MtbConfig mtb;
  selection::CvOptions cv;
  double retain_fraction = 0.25;
};

/// Selected indices of `method` on one simulated panel.
std::vector<Index> run_method(Method method, const DgpDraw& draw, const MethodOptions& options);

struct GridSpec {
  std::vector<DgpConfig> cells;
  std::vector<Method> methods{Method::PcaMtb, Method::PLasso, Method::ILasso};
  Index reps = 500;
  std::uint64_t seed = 0;
  MethodOptions options;
};

struct MetricMeans {
  double mcc = 0.0, f1 = 0.0, tpr = 0.0, fpr = 0.0, tdr = 0.0, fdr = 0.0, model_size = 0.0;
};

struct CellResult {
  DgpConfig config;
  std::vector<MetricMeans> methods;   // aligned with GridSpec::methods
};

struct GridResult {
  GridSpec spec;
  std::vector<CellResult> cells;
};

/// Runs every (cell, rep) item in parallel and reduces in (cell, rep) order,
/// so results do not depend on the number of threads.
GridResult run_grid(const GridSpec& spec);

/// Named cell lists: grid-r2, grid-r5 (T, n in {25, 50, 100}, N = T,
/// phi in {1, 0}) and full-r2, full-r5 (T in {50, 100, 200}, n = T - r).
std::vector<DgpConfig> preset(const std::string& name);

struct SummaryRow {
  std::string method;
  double median = 0.0, iqr = 0.0, min = 0.0, max = 0.0, share_above = 0.0, mean_rank = 0.0, share_first = 0.0;
};

/// Across-cell summary of one metric (higher is better), per method.
std::vector<SummaryRow> summarize(const GridResult& result, double MetricMeans::*metric, double cutoff = 0.8);

/// One CSV per metric shaped (r, phi, T) x (method, n), a long-format
/// cells.csv and summary.csv. Returns the written paths.
std::vector<std::filesystem::path> write_tables(const GridResult& result, const std::filesystem::path& dir);

}  // namespace dcp::mc
