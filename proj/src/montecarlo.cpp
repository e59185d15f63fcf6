#include "dcpanel/montecarlo.hpp"

#include "dcpanel/csv.hpp"
#include "dcpanel/error.hpp"
#include "dcpanel/stage2.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace dcp::mc {

void DgpConfig::validate() const {
  if (r < 1) fail(ErrorCode::InvalidConfig, "r must be at least 1");
  if (n < r) fail(ErrorCode::InvalidConfig, "n must be at least r (the first r extra factors are pseudo-signals)");
  if (!(rho >= 0.0 && rho < 1.0)) fail(ErrorCode::InvalidConfig, "rho must lie in [0, 1)");
  if (!(pi >= 0.0 && pi <= 1.0)) fail(ErrorCode::InvalidConfig, "pi must lie in [0, 1]");
  if (T < 5 || N < 2) fail(ErrorCode::InvalidConfig, "need T >= 5 and N >= 2");
  if (!std::isfinite(phi)) fail(ErrorCode::InvalidConfig, "phi must be finite");
}

Rng substream(std::uint64_t seed, std::uint64_t cell, std::uint64_t rep) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(cell), static_cast<std::uint32_t>(cell >> 32),
                    static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(rep >> 32)};
  return Rng(seq);
}

DgpDraw generate_dgp(const DgpConfig& c, Rng& rng) {
  c.validate();
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = std::sqrt(1.0 - c.rho * c.rho);
  const double w_v = std::sqrt(c.pi);
  const double w_e = std::sqrt(1.0 - c.pi);

  // Innovations: eps (T x r) drives the signals and, mixed with v, the pseudo-signals.
  Matrix eps(c.T, c.r);
  for (Index t = 0; t < c.T; ++t)
    for (Index j = 0; j < c.r; ++j) eps(t, j) = normal(rng);
  Matrix v(c.T, c.n);
  for (Index t = 0; t < c.T; ++t)
    for (Index j = 0; j < c.n; ++j) v(t, j) = normal(rng);

  DgpDraw d;
  d.g.resize(c.T, c.r);
  Matrix f(c.T, c.n);
  // Start from the stationary distribution (unit variance).
  for (Index j = 0; j < c.r; ++j) d.g(0, j) = eps(0, j);
  for (Index j = 0; j < c.n; ++j) f(0, j) = j < c.r ? w_v * v(0, j) + w_e * eps(0, j) : v(0, j);
  for (Index t = 1; t < c.T; ++t) {
    for (Index j = 0; j < c.r; ++j) d.g(t, j) = c.rho * d.g(t - 1, j) + scale * eps(t, j);
    for (Index j = 0; j < c.n; ++j) {
      const double shock = j < c.r ? w_v * v(t, j) + w_e * eps(t, j) : v(t, j);
      f(t, j) = c.rho * f(t - 1, j) + scale * shock;
    }
  }

  // delta_i ~ N(phi 1, 0.5 11' + 0.5 I)
  Matrix sigma = Matrix::Constant(c.r, c.r, 0.5);
  sigma.diagonal().array() += 0.5;
  const Matrix chol = sigma.llt().matrixL();
  d.loadings.resize(c.N, c.r);
  Vector z(c.r);
  for (Index i = 0; i < c.N; ++i) {
    for (Index j = 0; j < c.r; ++j) z(j) = normal(rng);
    d.loadings.row(i) = (Vector::Constant(c.r, c.phi) + chol * z).transpose();
  }

  d.u = d.loadings * d.g.transpose();
  for (Index i = 0; i < c.N; ++i)
    for (Index t = 0; t < c.T; ++t) d.u(i, t) += normal(rng);

  Matrix pool(c.T, c.r + c.n);
  pool.leftCols(c.r) = d.g;
  pool.rightCols(c.n) = f;
  d.pool.matrix = std::move(pool);
  d.pool.names.reserve(static_cast<std::size_t>(c.r + c.n));
  for (Index j = 0; j < c.r; ++j) d.pool.names.push_back("g" + std::to_string(j + 1));
  for (Index j = 0; j < c.n; ++j) d.pool.names.push_back("f" + std::to_string(j + 1));
  return d;
}

DgpDraw generate_dgp(const DgpConfig& config) {
  Rng rng = substream(config.seed, 0, 0);
  return generate_dgp(config, rng);
}

MetricReport score_selection(const std::vector<Index>& selected, Index r, Index pool_size) {
  if (r < 0 || r > pool_size) fail(ErrorCode::InvalidInput, "true set larger than the pool");
  std::set<Index> unique;
  for (Index j : selected) {
    if (j < 0 || j >= pool_size) {
      fail(ErrorCode::IndexOutOfRange, "selected index " + std::to_string(j) + " outside pool of " +
                                           std::to_string(pool_size));
    }
    unique.insert(j);
  }
  MetricReport m;
  for (Index j : unique) (j < r ? m.tp : m.fp)++;
  m.fn = r - m.tp;
  m.tn = pool_size - r - m.fp;
  m.model_size = static_cast<Index>(unique.size());
  const auto d = [](Index x) { return static_cast<double>(x); };
  const double den = d(m.tp + m.fp) * d(m.tp + m.fn) * d(m.tn + m.fp) * d(m.tn + m.fn);
  m.mcc = den > 0.0 ? (d(m.tp) * d(m.tn) - d(m.fp) * d(m.fn)) / std::sqrt(den) : 0.0;
  const Index f1_den = 2 * m.tp + m.fp + m.fn;
  m.f1 = f1_den > 0 ? 2.0 * d(m.tp) / d(f1_den) : 0.0;
  m.tpr = m.tp + m.fn > 0 ? d(m.tp) / d(m.tp + m.fn) : 0.0;
  m.fpr = m.fp + m.tn > 0 ? d(m.fp) / d(m.fp + m.tn) : 0.0;
  m.tdr = m.tp + m.fp > 0 ? d(m.tp) / d(m.tp + m.fp) : 0.0;
  m.fdr = m.tp + m.fp > 0 ? d(m.fp) / d(m.tp + m.fp) : 0.0;
  return m;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::PcaMtb: return "PCA-MTB";
    case Method::PLasso: return "p-Lasso";
    case Method::ILasso: return "i-Lasso";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::PcaMtb, Method::PLasso, Method::ILasso}) {
    if (method_name(m) == name) return m;
  }
  fail(ErrorCode::InvalidConfig, "unknown method '" + name + "' (expected PCA-MTB, p-Lasso or i-Lasso)");
}

std::vector<Index> run_method(Method method, const DgpDraw& draw, const MethodOptions& options) {
  switch (method) {
    case Method::PcaMtb: {
      stage2::PcaMtbOptions o;
      o.mtb = options.mtb;
      return stage2::pca_mtb(draw.u, draw.pool, o).selection.selected;
    }
    case Method::PLasso:
      return selection::pooled_lasso(draw.u, draw.pool, options.cv).selected;
    case Method::ILasso:
      return selection::individual_lasso(draw.u, draw.pool, options.retain_fraction, options.cv).selected;
  }
  return {};
}

GridResult run_grid(const GridSpec& spec) {
  if (spec.reps < 1) fail(ErrorCode::InvalidConfig, "reps must be at least 1");
  if (spec.methods.empty()) fail(ErrorCode::InvalidConfig, "no methods requested");
  for (const auto& c : spec.cells) c.validate();

  const Index cells = static_cast<Index>(spec.cells.size());
  const Index methods = static_cast<Index>(spec.methods.size());
  const Index items = cells * spec.reps;
  std::vector<MetricReport> reports(static_cast<std::size_t>(items * methods));
  std::vector<std::string> errors(static_cast<std::size_t>(items));
  std::vector<int> codes(static_cast<std::size_t>(items), -1);

#pragma omp parallel for schedule(dynamic)
  for (Index item = 0; item < items; ++item) {
    const Index cell = item / spec.reps;
    const Index rep = item % spec.reps;
    try {
      const DgpConfig& c = spec.cells[static_cast<std::size_t>(cell)];
      Rng rng = substream(spec.seed, static_cast<std::uint64_t>(cell), static_cast<std::uint64_t>(rep));
      const DgpDraw draw = generate_dgp(c, rng);
      for (Index m = 0; m < methods; ++m) {
        const auto sel = run_method(spec.methods[static_cast<std::size_t>(m)], draw, spec.options);
        reports[static_cast<std::size_t>(item * methods + m)] = score_selection(sel, c.r, c.pool_size());
      }
    } catch (const Error& e) {
      errors[static_cast<std::size_t>(item)] = e.what();
      codes[static_cast<std::size_t>(item)] = static_cast<int>(e.code());
    }
  }

  for (Index item = 0; item < items; ++item) {
    if (codes[static_cast<std::size_t>(item)] < 0) continue;
    const DgpConfig& c = spec.cells[static_cast<std::size_t>(item / spec.reps)];
    throw Error(static_cast<ErrorCode>(codes[static_cast<std::size_t>(item)]),
                "cell (r=" + std::to_string(c.r) + ", phi=" + io::format_number(c.phi) + ", T=" + std::to_string(c.T) +
                    ", n=" + std::to_string(c.n) + ") rep " + std::to_string(item % spec.reps) + ": " +
                    errors[static_cast<std::size_t>(item)]);
  }

  GridResult out;
  out.spec = spec;
  out.cells.resize(static_cast<std::size_t>(cells));
  const double inv = 1.0 / static_cast<double>(spec.reps);
  for (Index cell = 0; cell < cells; ++cell) {
    CellResult& cr = out.cells[static_cast<std::size_t>(cell)];
    cr.config = spec.cells[static_cast<std::size_t>(cell)];
    cr.methods.assign(static_cast<std::size_t>(methods), {});
    for (Index m = 0; m < methods; ++m) {
      MetricMeans& mm = cr.methods[static_cast<std::size_t>(m)];
      for (Index rep = 0; rep < spec.reps; ++rep) {
        const MetricReport& r = reports[static_cast<std::size_t>((cell * spec.reps + rep) * methods + m)];
        mm.mcc += r.mcc;
        mm.f1 += r.f1;
        mm.tpr += r.tpr;
        mm.fpr += r.fpr;
        mm.tdr += r.tdr;
        mm.fdr += r.fdr;
        mm.model_size += static_cast<double>(r.model_size);
      }
      mm.mcc *= inv;
      mm.f1 *= inv;
      mm.tpr *= inv;
      mm.fpr *= inv;
      mm.tdr *= inv;
      mm.fdr *= inv;
      mm.model_size *= inv;
    }
  }
  return out;
}

std::vector<DgpConfig> preset(const std::string& name) {
  std::vector<DgpConfig> out;
  auto grid = [&](Index r) {
    for (double phi : {1.0, 0.0})
      for (Index t : {25, 50, 100})
        for (Index n : {25, 50, 100}) out.push_back({r, n, t, t, 0.5, 0.5, phi, 0});
  };
  auto full = [&](Index r) {
    for (double phi : {1.0, 0.0})
      for (Index t : {50, 100, 200}) out.push_back({r, t - r, t, t, 0.5, 0.5, phi, 0});
  };
  if (name == "grid-r2") grid(2);
  else if (name == "grid-r5") grid(5);
  else if (name == "grid") { grid(2); grid(5); }
  else if (name == "full-r2") full(2);
  else if (name == "full-r5") full(5);
  else fail(ErrorCode::InvalidConfig, "unknown preset '" + name + "' (grid-r2, grid-r5, grid, full-r2, full-r5)");
  return out;
}

namespace {

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct MetricColumn {
  const char* name;
  double MetricMeans::*field;
};

constexpr MetricColumn kMetrics[] = {
    {"mcc", &MetricMeans::mcc}, {"f1", &MetricMeans::f1},   {"model_size", &MetricMeans::model_size},
    {"tdr", &MetricMeans::tdr}, {"fdr", &MetricMeans::fdr}, {"tpr", &MetricMeans::tpr},
    {"fpr", &MetricMeans::fpr},
};

}  // namespace

std::vector<SummaryRow> summarize(const GridResult& result, double MetricMeans::*metric, double cutoff) {
  const std::size_t methods = result.spec.methods.size();
  std::vector<SummaryRow> rows(methods);
  if (result.cells.empty()) return rows;
  std::vector<std::vector<double>> values(methods);
  std::vector<double> rank_sum(methods, 0.0), firsts(methods, 0.0);
  for (const CellResult& c : result.cells) {
    for (std::size_t m = 0; m < methods; ++m) {
      const double v = c.methods[m].*metric;
      values[m].push_back(v);
      std::size_t better = 0;
      for (std::size_t o = 0; o < methods; ++o) {
        if (c.methods[o].*metric > v) ++better;
      }
      rank_sum[m] += static_cast<double>(better + 1);
      if (better == 0) firsts[m] += 1.0;
    }
  }
  const double cells = static_cast<double>(result.cells.size());
  for (std::size_t m = 0; m < methods; ++m) {
    SummaryRow& row = rows[m];
    row.method = method_name(result.spec.methods[m]);
    row.median = quantile(values[m], 0.5);
    row.iqr = quantile(values[m], 0.75) - quantile(values[m], 0.25);
    row.min = *std::min_element(values[m].begin(), values[m].end());
    row.max = *std::max_element(values[m].begin(), values[m].end());
    row.share_above =
        static_cast<double>(std::count_if(values[m].begin(), values[m].end(), [&](double v) { return v > cutoff; })) /
        cells;
    row.mean_rank = rank_sum[m] / cells;
    row.share_first = firsts[m] / cells;
  }
  return rows;
}

std::vector<std::filesystem::path> write_tables(const GridResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const auto& methods = result.spec.methods;

  std::vector<Index> ns;
  for (const auto& c : result.cells) {
    if (std::find(ns.begin(), ns.end(), c.config.n) == ns.end()) ns.push_back(c.config.n);
  }
  std::sort(ns.begin(), ns.end());

  // Row key (r, phi, T, N) in first-appearance order.
  struct Key {
    Index r;
    double phi;
    Index t, n_units;
    bool operator==(const Key& o) const { return r == o.r && phi == o.phi && t == o.t && n_units == o.n_units; }
  };
  std::vector<Key> keys;
  for (const auto& c : result.cells) {
    const Key k{c.config.r, c.config.phi, c.config.T, c.config.N};
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  }

  for (const MetricColumn& metric : kMetrics) {
    const auto path = dir / (std::string(metric.name) + ".csv");
    io::CsvWriter w(path);
    std::vector<std::string> header{"r", "phi", "T", "N"};
    for (Method m : methods)
      for (Index n : ns) header.push_back(method_name(m) + " n=" + std::to_string(n));
    w.row(header);
    for (const Key& k : keys) {
      std::vector<std::string> row{std::to_string(k.r), io::format_number(k.phi), std::to_string(k.t),
                                   std::to_string(k.n_units)};
      for (std::size_t m = 0; m < methods.size(); ++m) {
        for (Index n : ns) {
          std::string cell;
          for (const auto& c : result.cells) {
            const Key ck{c.config.r, c.config.phi, c.config.T, c.config.N};
            if (ck == k && c.config.n == n) cell = io::format_fixed(c.methods[m].*metric.field, 3);
          }
          row.push_back(cell);
        }
      }
      w.row(row);
    }
    written.push_back(path);
  }

  {
    const auto path = dir / "cells.csv";
    io::CsvWriter w(path);
    std::vector<std::string> header{"r", "phi", "T", "N", "n", "method", "reps"};
    for (const MetricColumn& metric : kMetrics) header.emplace_back(metric.name);
    w.row(header);
    for (const auto& c : result.cells) {
      for (std::size_t m = 0; m < methods.size(); ++m) {
        std::vector<std::string> row{std::to_string(c.config.r), io::format_number(c.config.phi),
                                     std::to_string(c.config.T), std::to_string(c.config.N),
                                     std::to_string(c.config.n), method_name(methods[m]),
                                     std::to_string(result.spec.reps)};
        for (const MetricColumn& metric : kMetrics) row.push_back(io::format_fixed(c.methods[m].*metric.field, 6));
        w.row(row);
      }
    }
    written.push_back(path);
  }

  {
    const auto path = dir / "summary.csv";
    io::CsvWriter w(path);
    w.row({"r", "method", "median", "IQR", "min", "max", "prop. > 0.8", "rank", "prop. 1st"});
    std::vector<Index> rs;
    for (const auto& c : result.cells) {
      if (std::find(rs.begin(), rs.end(), c.config.r) == rs.end()) rs.push_back(c.config.r);
    }
    for (Index r : rs) {
      GridResult sub;
      sub.spec = result.spec;
      for (const auto& c : result.cells) {
        if (c.config.r == r) sub.cells.push_back(c);
      }
      for (const SummaryRow& s : summarize(sub, &MetricMeans::mcc)) {
        w.row({std::to_string(r), s.method, io::format_fixed(s.median, 3), io::format_fixed(s.iqr, 3),
               io::format_fixed(s.min, 3), io::format_fixed(s.max, 3), io::format_fixed(100.0 * s.share_above, 1) + "%",
               io::format_fixed(s.mean_rank, 3), io::format_fixed(100.0 * s.share_first, 2) + "%"});
      }
    }
    written.push_back(path);
  }
  return written;
}

}  // namespace dcp::mc
