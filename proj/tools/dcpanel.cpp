// dcpanel: feature preparation, two-stage estimation and the Monte Carlo harness.

#include "dcpanel/csv.hpp"
#include "dcpanel/datasets.hpp"
#include "dcpanel/error.hpp"
#include "dcpanel/kernels.hpp"
#include "dcpanel/montecarlo.hpp"
#include "dcpanel/pipeline.hpp"
#include "dcpanel/prep.hpp"
#include "dcpanel/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <boost/version.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#ifndef DCPANEL_VERSION
#define DCPANEL_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
namespace pt = boost::property_tree;
using namespace dcp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

struct Common {
  std::string config;
  std::optional<int> jobs;
  std::optional<std::uint64_t> seed;
  std::string out;
};

// Effective settings: the config file with command-line values written over it.
class Settings {
 public:
  explicit Settings(const std::string& path) {
    if (path.empty()) return;
    if (!fs::exists(path)) fail(ErrorCode::InvalidConfig, "config file not found: " + path);
    try {
      pt::read_ini(path, tree_);
    } catch (const pt::ini_parser_error& e) {
      fail(ErrorCode::InvalidConfig, e.what());
    }
  }

  std::string text(const std::string& key, const std::string& fallback = "") const {
    return tree_.get<std::string>(key, fallback);
  }
  bool has(const std::string& key) const { return tree_.get_optional<std::string>(key).has_value(); }
  void set(const std::string& key, const std::string& value) { tree_.put(key, value); }

  template <typename T>
  T number(const std::string& key, T fallback) const {
    const auto raw = tree_.get_optional<std::string>(key);
    if (!raw) return fallback;
    std::istringstream in(*raw);
    T v{};
    if (!(in >> v) || !(in >> std::ws).eof()) fail(ErrorCode::InvalidConfig, "'" + key + "' is not a number: " + *raw);
    return v;
  }

  bool flag(const std::string& key, bool fallback) const {
    const auto raw = tree_.get_optional<std::string>(key);
    if (!raw) return fallback;
    if (*raw == "true" || *raw == "1" || *raw == "yes") return true;
    if (*raw == "false" || *raw == "0" || *raw == "no") return false;
    fail(ErrorCode::InvalidConfig, "'" + key + "' must be true or false, got " + *raw);
  }

  std::vector<std::string> list(const std::string& key, const std::vector<std::string>& fallback) const {
    const auto raw = tree_.get_optional<std::string>(key);
    if (!raw) return fallback;
    std::vector<std::string> out;
    std::stringstream in(*raw);
    std::string item;
    while (std::getline(in, item, ',')) {
      const auto b = item.find_first_not_of(" \t");
      const auto e = item.find_last_not_of(" \t");
      if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
  }

  std::string path(const std::string& key) const {
    const std::string p = text(key);
    if (p.empty()) fail(ErrorCode::InvalidConfig, "missing required input '" + key + "'");
    if (!fs::exists(p)) fail(ErrorCode::InvalidConfig, "input '" + key + "' not found: " + p);
    return p;
  }

  std::string dump() const {
    std::ostringstream out;
    pt::write_ini(out, tree_);
    return out.str();
  }

 private:
  pt::ptree tree_;
};

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Seed precedence: flag, then config, then a fresh draw recorded in the manifest.
std::uint64_t resolve_seed(const Common& common, Settings& settings) {
  std::uint64_t seed = 0;
  if (common.seed) seed = *common.seed;
  else if (settings.has("run.seed")) seed = settings.number<std::uint64_t>("run.seed", 0);
  else seed = (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^ std::random_device{}();
  settings.set("run.seed", std::to_string(seed));
  return seed;
}

int resolve_jobs(const Common& common, const Settings& settings) {
  const int jobs = common.jobs ? *common.jobs : settings.number<int>("run.jobs", 0);
  if (jobs < 0) fail(ErrorCode::InvalidConfig, "--jobs must be non-negative");
  if (jobs > 0) kernels::set_threads(jobs);
  return jobs;
}

// The output directory is not recorded: manifests of identical runs compare equal.
fs::path resolve_out(const Common& common, const Settings& settings, const std::string& fallback) {
  const std::string out = common.out.empty() ? settings.text("run.out", fallback) : common.out;
  fs::create_directories(out);
  return out;
}

void write_manifest(const fs::path& dir, const std::string& command, std::uint64_t seed, const Settings& settings,
                    const std::vector<std::string>& outputs) {
  // No job count or timestamp: outputs do not depend on either.
  nlohmann::ordered_json m;
  m["command"] = command;
  m["seed"] = seed;
  const std::string effective = settings.dump();
  m["config_hash"] = fmt::format("{:016x}", fnv1a(effective));
  m["config"] = effective;
  m["versions"] = {
      {"dcpanel", DCPANEL_VERSION},
      {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
      {"boost", fmt::format("{}.{}.{}", BOOST_VERSION / 100000, BOOST_VERSION / 100 % 1000, BOOST_VERSION % 100)},
      {"fmt", fmt::format("{}.{}.{}", FMT_VERSION / 10000, FMT_VERSION / 100 % 100, FMT_VERSION % 100)},
      {"compiler", __VERSION__},
  };
  m["outputs"] = outputs;
  std::ofstream f(dir / "manifest.json", std::ios::binary);
  f << m.dump(2) << "\n";
}

std::vector<std::string> listing(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "manifest.json") out.push_back(e.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------

struct PrepArgs {
  std::string daily;
};

int cmd_prep(const Common& common, const PrepArgs& args) {
  Settings s(common.config);
  if (!args.daily.empty()) s.set("prep.daily", args.daily);
  const std::uint64_t seed = resolve_seed(common, s);
  resolve_jobs(common, s);
  features::AmihudOptions amihud;
  amihud.days_per_week = s.number<std::size_t>("prep.days_per_week", 7);
  amihud.divisor = s.number<double>("prep.amihud_divisor", static_cast<double>(amihud.days_per_week));
  if (!(amihud.divisor > 0.0)) fail(ErrorCode::InvalidConfig, "prep.amihud_divisor must be positive");
  const std::string daily = s.path("prep.daily");
  const fs::path out = resolve_out(common, s, "prep_out");

  const features::FeatureTable table = features::prepare(io::read_ohlcv(daily), amihud);
  features::write_features(table, out / "features.csv");
  if (table.cvlt) {
    io::CsvWriter cv(out / "market_volatility.csv");
    cv.row({"date", "CVLT"});
    for (Index k = 0; k < table.cvlt->size(); ++k) {
      cv.row({panel::format_date(table.weeks[static_cast<std::size_t>(k)]), io::format_number((*table.cvlt)(k))});
    }
  }
  write_manifest(out, "prep", seed, s, listing(out));
  std::cout << fmt::format("prep: {} units x {} weeks -> {} (Garman-Klass clamps: {})\n", table.units.size(),
                           table.weeks.size(), (out / "features.csv").string(), table.clamped);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EstimateArgs {
  std::string panel, factors, proxies, groups;
};

pipeline::EstimateConfig estimate_config(const Settings& s) {
  pipeline::EstimateConfig c;
  c.stage1.zeta = s.number<Index>("estimate.zeta", 5);
  const std::string k_f = s.text("estimate.k_f", "auto");
  if (k_f != "auto") c.stage1.k_f = s.number<Index>("estimate.k_f", 0);
  c.stage1.k_max = s.number<Index>("estimate.k_max", 8);
  c.stage1.intercept = s.flag("estimate.intercept", true);
  c.regressors = s.list("estimate.regressors", c.regressors);
  c.semi = s.list("estimate.semi", c.semi);
  const std::string components = s.text("estimate.components", "leading");
  if (components != "leading" && components != "auto") {
    fail(ErrorCode::InvalidConfig, "estimate.components must be 'leading' or 'auto'");
  }
  c.stage2.components_auto = components == "auto";
  c.stage2.k_max = c.stage1.k_max;
  c.stage2.mtb.p_val = s.number<double>("mtb.p_val", 0.05);
  c.stage2.mtb.c1 = s.number<double>("mtb.c1", 1.0);
  c.stage2.mtb.delta1 = s.number<double>("mtb.delta1", 2.0);
  if (s.has("mtb.max_steps")) c.stage2.mtb.max_steps = s.number<Index>("mtb.max_steps", 0);
  const std::string agg = s.text("estimate.aggregation", "mean");
  if (agg == "mean") c.monthly.method = panel::Aggregation::Mean;
  else if (agg == "median") c.monthly.method = panel::Aggregation::Median;
  else fail(ErrorCode::InvalidConfig, "estimate.aggregation must be 'mean' or 'median'");
  c.monthly.min_boundary_weeks = s.number<Index>("estimate.min_boundary_weeks", 1);
  c.shapley = s.flag("estimate.shapley", true);
  c.stage2.mtb.validate();
  return c;
}

int cmd_estimate(const Common& common, const EstimateArgs& args) {
  Settings s(common.config);
  if (!args.panel.empty()) s.set("estimate.panel", args.panel);
  if (!args.factors.empty()) s.set("estimate.factors", args.factors);
  if (!args.proxies.empty()) s.set("estimate.proxies", args.proxies);
  if (!args.groups.empty()) s.set("estimate.groups", args.groups);
  const std::uint64_t seed = resolve_seed(common, s);
  resolve_jobs(common, s);
  const pipeline::EstimateConfig config = estimate_config(s);

  pipeline::EstimateInputs in;
  in.panel = io::read_panel(s.path("estimate.panel"), s.text("estimate.outcome", "r"));
  in.factors = io::read_factors(s.path("estimate.factors"));
  in.proxies = io::read_proxies(s.path("estimate.proxies"));
  if (s.has("estimate.groups")) in.groups = io::read_groups(s.path("estimate.groups"));
  pipeline::validate(in, config);
  const fs::path out = resolve_out(common, s, "estimate_out");

  const pipeline::EstimateReport report = pipeline::run_estimate(in, config);
  pipeline::write_report(report, out, s.flag("estimate.stars", true));
  write_manifest(out, "estimate", seed, s, listing(out));

  std::cout << fmt::format("N {}  T_eff {}  NT {}  k_f {}\n", report.stage1.fits.size(), report.stage1.sample.length(),
                           report.nt(), report.stage1.k_f);
  std::cout << fmt::format("leading residual component explains {:.1f}% of residual variance\n",
                           100.0 * report.stage2.components.front().explained_share);
  std::cout << "selected proxies:";
  for (const auto& name : report.selected_names) std::cout << ' ' << name;
  std::cout << (report.selected_names.empty() ? " (none)\n" : "\n");
  std::cout << "outputs in " << out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct McArgs {
  std::string preset;
  std::optional<Index> reps;
  std::string methods;
};

mc::GridSpec grid_spec(const Settings& s, std::uint64_t seed) {
  mc::GridSpec g;
  g.seed = seed;
  g.reps = s.number<Index>("mc.reps", 500);
  if (g.reps < 1) fail(ErrorCode::InvalidConfig, "mc.reps must be at least 1");
  g.methods.clear();
  for (const auto& m : s.list("mc.methods", {"PCA-MTB", "p-Lasso", "i-Lasso"})) g.methods.push_back(mc::parse_method(m));
  if (g.methods.empty()) fail(ErrorCode::InvalidConfig, "mc.methods is empty");
  if (s.has("mc.preset")) {
    g.cells = mc::preset(s.text("mc.preset"));
  } else {
    // A single custom cell.
    mc::DgpConfig c;
    c.r = s.number<Index>("mc.r", 2);
    c.n = s.number<Index>("mc.n", 50);
    c.T = s.number<Index>("mc.T", 50);
    c.N = s.number<Index>("mc.N", c.T);
    c.rho = s.number<double>("mc.rho", 0.5);
    c.pi = s.number<double>("mc.pi", 0.5);
    c.phi = s.number<double>("mc.phi", 1.0);
    c.validate();
    g.cells.push_back(c);
  }
  g.options.mtb.p_val = s.number<double>("mtb.p_val", 0.05);
  g.options.mtb.c1 = s.number<double>("mtb.c1", 1.0);
  g.options.mtb.delta1 = s.number<double>("mtb.delta1", 2.0);
  g.options.mtb.validate();
  g.options.retain_fraction = s.number<double>("mc.retain_fraction", 0.25);
  if (!(g.options.retain_fraction > 0.0 && g.options.retain_fraction <= 1.0)) {
    fail(ErrorCode::InvalidConfig, "mc.retain_fraction must lie in (0, 1]");
  }
  g.options.cv.folds = s.number<Index>("mc.folds", 10);
  const std::string rule = s.text("mc.cv_rule", "1se");
  if (rule == "1se") g.options.cv.rule = selection::CvRule::OneSe;
  else if (rule == "min") g.options.cv.rule = selection::CvRule::Min;
  else fail(ErrorCode::InvalidConfig, "mc.cv_rule must be '1se' or 'min'");
  return g;
}

int cmd_mc(const Common& common, const McArgs& args) {
  Settings s(common.config);
  if (!args.preset.empty()) s.set("mc.preset", args.preset);
  if (args.reps) s.set("mc.reps", std::to_string(*args.reps));
  if (!args.methods.empty()) s.set("mc.methods", args.methods);
  const std::uint64_t seed = resolve_seed(common, s);
  resolve_jobs(common, s);
  const mc::GridSpec spec = grid_spec(s, seed);
  const fs::path out = resolve_out(common, s, "mc_out");

  const mc::GridResult result = mc::run_grid(spec);
  mc::write_tables(result, out);
  write_manifest(out, "mc", seed, s, listing(out));
  std::cout << fmt::format("mc: {} cells x {} reps x {} methods -> {}\n", spec.cells.size(), spec.reps,
                           spec.methods.size(), out.string());
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  Index units = 40;
  Index periods = 157;
  Index observed = 10;
  Index noise_proxies = 33;
};

int cmd_synth(const Common& common, const SynthArgs& args) {
  Settings s(common.config);
  const std::uint64_t seed = resolve_seed(common, s);
  mc::ModelConfig c;
  c.N = s.number<Index>("synth.N", args.units);
  c.T = s.number<Index>("synth.T", args.periods);
  c.k_y = s.number<Index>("synth.k_y", args.observed);
  c.k_g = s.number<Index>("synth.k_g", 2);
  c.noise_proxies = s.number<Index>("synth.noise_proxies", args.noise_proxies);
  c.seed = seed;
  for (const auto& [key, value] : std::vector<std::pair<std::string, std::string>>{
           {"synth.N", std::to_string(c.N)}, {"synth.T", std::to_string(c.T)}, {"synth.k_y", std::to_string(c.k_y)},
           {"synth.k_g", std::to_string(c.k_g)}, {"synth.noise_proxies", std::to_string(c.noise_proxies)}}) {
    s.set(key, value);
  }
  const fs::path out = resolve_out(common, s, "synth_out");
  const mc::ModelDraw draw = mc::generate_model(c);
  const pipeline::EstimateInputs in = mc::estimate_inputs(draw);
  io::write_panel(in.panel, out / "panel.csv", "r");
  io::write_factors(in.factors, out / "factors.csv");
  io::write_proxies(in.proxies, out / "proxies.csv");
  io::write_groups(in.groups, out / "groups.csv");
  io::CsvWriter truth(out / "truth.csv");
  truth.row({"unit", "param", "value"});
  const Vector mean = c.theta_mean();
  std::vector<std::string> names{"r_lag1", "ILQ", "VLT"};
  for (const auto& y : in.factors.names) names.push_back(y);
  names.push_back("const");
  for (Index i = 0; i < draw.theta.rows(); ++i) {
    for (Index j = 0; j < draw.theta.cols(); ++j) {
      truth.row({in.panel.unit_ids[static_cast<std::size_t>(i)], names[static_cast<std::size_t>(j)],
                 io::format_number(draw.theta(i, j))});
    }
    for (Index j = 0; j < draw.delta.cols(); ++j) {
      truth.row({in.panel.unit_ids[static_cast<std::size_t>(i)], draw.proxy_names[static_cast<std::size_t>(j)],
                 io::format_number(draw.delta(i, j))});
    }
  }
  for (Index j = 0; j < mean.size(); ++j) truth.row({"population", names[static_cast<std::size_t>(j)], io::format_number(mean(j))});
  write_manifest(out, "synth", seed, s, listing(out));
  std::cout << fmt::format("synth: N {} T {} K_y {} proxies {} -> {}\n", c.N, c.T, c.k_y,
                           in.proxies.pool.size(), out.string());
  return kExitOk;
}

void add_common(CLI::App* app, Common& common) {
  app->add_option("--config", common.config, "INI configuration file; flags override its values");
  app->add_option("--jobs", common.jobs, "worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
  app->add_option("--seed", common.seed, "root seed (drawn and recorded when absent)");
  app->add_option("--out", common.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage heterogeneous panel estimation with latent economy-wide risk"};
  app.set_version_flag("--version", std::string(DCPANEL_VERSION));
  app.require_subcommand(1);

  Common common;
  PrepArgs prep_args;
  EstimateArgs est_args;
  McArgs mc_args;
  SynthArgs synth_args;

  auto* prep = app.add_subcommand("prep", "weekly features r, VLT, ILQ, VLM from daily OHLCV bars");
  add_common(prep, common);
  prep->add_option("--daily", prep_args.daily, "daily CSV unit,date,open,high,low,close,volume[,market_cap]");

  auto* est = app.add_subcommand("estimate", "Stage 1, Stage 2 and Mean Group tables");
  add_common(est, common);
  est->add_option("--panel", est_args.panel, "long panel CSV unit,date,<outcome>,<covariates...>");
  est->add_option("--factors", est_args.factors, "observed factors CSV date,<factor...>");
  est->add_option("--proxies", est_args.proxies, "monthly proxies CSV month,<proxy...>");
  est->add_option("--groups", est_args.groups, "groups CSV unit,scheme,label");

  auto* mcc = app.add_subcommand("mc", "Monte Carlo comparison of PCA-MTB, p-Lasso and i-Lasso");
  add_common(mcc, common);
  mcc->add_option("--preset", mc_args.preset, "grid-r2, grid-r5, grid, full-r2 or full-r5");
  mcc->add_option("--reps", mc_args.reps, "replications per cell")->check(CLI::PositiveNumber);
  mcc->add_option("--methods", mc_args.methods, "comma-separated subset of PCA-MTB,p-Lasso,i-Lasso");

  auto* syn = app.add_subcommand("synth", "write a synthetic dataset with known exposures");
  add_common(syn, common);
  syn->add_option("--units", synth_args.units, "N")->check(CLI::PositiveNumber);
  syn->add_option("--periods", synth_args.periods, "T (weeks)")->check(CLI::PositiveNumber);
  syn->add_option("--observed", synth_args.observed, "observed factors K_y")->check(CLI::NonNegativeNumber);
  syn->add_option("--noise-proxies", synth_args.noise_proxies, "irrelevant monthly proxies")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*prep) return cmd_prep(common, prep_args);
    if (*est) return cmd_estimate(common, est_args);
    if (*mcc) return cmd_mc(common, mc_args);
    if (*syn) return cmd_synth(common, synth_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_numerical(e.code()) ? kExitNumerical : kExitValidation;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitValidation;
}
