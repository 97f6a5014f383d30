#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "boats/cli/config.hpp"
#include "boats/cli/csv.hpp"
#include "boats/evaluation.hpp"
#include "boats/parallel.hpp"

namespace boats::cli {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// generate

struct GeneratedFiles {
  fs::path data, truth, meta;
  Index samples = 0, features = 0;
};

inline GeneratedFiles cmd_generate(DatasetConfig cfg, const fs::path& out_dir, std::optional<Seed> seed = {}) {
  if (seed) cfg.spec.seed = *seed;
  const GroundTruth truth = draw_weights(cfg.spec);
  const Index m = samples_for_ratio(truth.weights.size(), cfg.sample_ratio);
  const Dataset data = make_dataset(truth, m, derive_seed(cfg.spec.seed, {tag("dataset")}));

  fs::create_directories(out_dir);
  GeneratedFiles files{out_dir / "data.csv", out_dir / "truth.csv", out_dir / "meta.yaml", m,
                       truth.weights.size()};
  write_text(files.data.string(), dataset_csv(data));
  write_text(files.truth.string(), column_csv("beta", truth.weights));

  // The sidecar is itself a valid dataset config.
  std::ostringstream meta;
  meta << "# regenerate with: boats generate --config meta.yaml\n"
       << "# d: " << truth.weights.size() << '\n'
       << "# m: " << m << '\n'
       << "# noise_sigma: " << format_double(truth.noise_sigma) << '\n'
       << dataset_config_yaml(cfg);
  write_text(files.meta.string(), meta.str());
  return files;
}

// ---------------------------------------------------------------------------
// fit

struct FitOptions {
  std::string data_path;
  std::string response = "y";
  Method method = Method::BoATS;
  std::optional<double> lambda;  // skips the sweep
  double select_fraction = 0.1;
  double test_fraction = 0.0;
  int iterations = 1;
  int n_permutations = 100;
  Seed seed = 1;
  unsigned workers = 1;
};

struct FitOutcome {
  WeightVector weights;
  double meta_parameter = kNaN;
  Summary test_r2;
  Index samples = 0, features = 0;
  std::vector<std::string> warnings;
  std::vector<std::string> feature_names;
};

inline FitOutcome fit_dataset(const Dataset& data, const FitOptions& opt) {
  FitOutcome out;
  out.samples = data.samples();
  out.features = data.features();
  const bool ols_based = opt.method == Method::OLS || opt.method == Method::BoATS;
  if (ols_based && data.features() >= data.samples())
    out.warnings.push_back("d (" + std::to_string(data.features()) + ") >= m (" + std::to_string(data.samples()) +
                           "): least-squares fits are underdetermined; minimum-norm solutions are used");

  BootstrapConfig cfg;
  cfg.method = opt.method;
  cfg.iterations = opt.iterations;
  cfg.master_seed = opt.seed;
  cfg.n_permutations = opt.n_permutations;
  cfg.workers = opt.workers;
  cfg.fractions = {1.0 - opt.select_fraction - opt.test_fraction, opt.select_fraction, opt.test_fraction};

  if (opt.lambda && opt.method == Method::BoATS) {
    // Single threshold: null on the train split, threshold, OLS refit.
    const auto plan = make_split(data.samples(), cfg.fractions, opt.seed);
    const Dataset train = data.rows(plan.train);
    const auto null = estimate_null(train, opt.n_permutations, derive_seed(opt.seed, {tag("null")}));
    const auto init = ols_fit(train).weights;
    out.weights = ols_fit(train, threshold_weights(init, null, *opt.lambda)).weights;
    out.meta_parameter = *opt.lambda;
    if (!plan.test.empty()) {
      const double r2 = r_squared(out.weights, data.rows(plan.test));
      out.test_r2 = {r2, 0.0};
    }
    return out;
  }
  if (opt.lambda) cfg.sweep = SweepPlan::fixed(*opt.lambda);

  const auto report = run_bootstrap(data, cfg);
  out.weights = report.beta_opt_expected;
  out.meta_parameter = report.consensus_meta;
  out.test_r2 = report.r2;
  if (report.failures > 0)
    out.warnings.push_back(std::to_string(report.failures) + " bootstrap iteration(s) failed and were excluded");
  if (report.nonconverged_fits > 0)
    out.warnings.push_back(std::to_string(report.nonconverged_fits) + " coordinate-descent fit(s) hit max_iter");
  return out;
}

/// Writes <out>/weights.csv (column "beta") and <out>/report.yaml.
inline FitOutcome cmd_fit(const FitOptions& opt, const fs::path& out_dir) {
  if (!(opt.select_fraction > 0.0) || !(opt.test_fraction >= 0.0) || opt.select_fraction + opt.test_fraction >= 1.0)
    throw std::invalid_argument("need select_fraction > 0, test_fraction >= 0 and their sum < 1");
  auto loaded = load_dataset(opt.data_path, opt.response);
  auto out = fit_dataset(loaded.data, opt);
  out.feature_names = std::move(loaded.feature_names);

  fs::create_directories(out_dir);
  write_text((out_dir / "weights.csv").string(), column_csv("beta", out.weights));
  std::ostringstream rep;
  rep << "method: " << to_string(opt.method) << '\n'
      << "data: " << opt.data_path << '\n'
      << "response: " << opt.response << '\n'
      << "samples: " << out.samples << '\n'
      << "features: " << out.features << '\n'
      << "iterations: " << opt.iterations << '\n'
      << "seed: " << opt.seed << '\n'
      << "meta_parameter: " << format_double(out.meta_parameter) << '\n'
      << "nonzero_weights: " << count_nonzero(out.weights) << '\n';
  if (opt.test_fraction > 0.0)
    rep << "test_fraction: " << format_double(opt.test_fraction) << '\n'
        << "test_r2_mean: " << format_double(out.test_r2.mean) << '\n'
        << "test_r2_sd: " << format_double(out.test_r2.sd) << '\n';
  for (const auto& w : out.warnings) rep << "# warning: " << w << '\n';
  write_text((out_dir / "report.yaml").string(), rep.str());
  return out;
}

// ---------------------------------------------------------------------------
// benchmark results

inline constexpr int kResultsSchemaVersion = 1;

struct ResultRow {
  std::string cell_hash;
  Distribution distribution = Distribution::AsymmetricClustered;
  Index k = 0;
  double sparsity = 0, sample_ratio = 0, noise_factor = 0;
  Index d = 0, m = 0;
  Method method = Method::BoATS;
  int iterations = 0;
  Seed master_seed = 0;
  Summary r2, rms, variability, bic, test_rss, support_ratio, meta;
  double consensus_meta = kNaN;
  double rms_consensus = kNaN;
  int nonconverged_fits = 0;
  int failures = 0;
  std::string failure;  // empty when the cell ran
  double runtime_seconds = 0.0;  // sidecar only
};

inline const std::vector<std::string>& results_columns() {
  static const std::vector<std::string> cols{
      "schema_version", "cell_hash", "distribution", "k", "sparsity", "sample_ratio", "noise_factor", "d", "m",
      "method", "iterations", "master_seed", "r2_mean", "r2_sd", "rms_mean", "rms_sd", "variability_mean",
      "variability_sd", "bic_mean", "bic_sd", "test_rss_mean", "test_rss_sd", "support_ratio_mean",
      "support_ratio_sd", "meta_mean", "meta_sd", "consensus_meta", "rms_consensus", "nonconverged_fits",
      "failures", "failure"};
  return cols;
}

inline std::string results_header() {
  std::string h;
  for (const auto& c : results_columns()) h += (h.empty() ? "" : ",") + c;
  return h;
}

inline std::string format_row(const ResultRow& r) {
  std::ostringstream os;
  auto put = [&os](const std::string& s) { os << ',' << s; };
  auto num = [&put](double v) { put(format_double(v)); };
  auto pair = [&num](const Summary& s) { num(s.mean); num(s.sd); };
  os << kResultsSchemaVersion;
  put(r.cell_hash);
  put(std::string(to_string(r.distribution)));
  put(std::to_string(r.k));
  num(r.sparsity);
  num(r.sample_ratio);
  num(r.noise_factor);
  put(std::to_string(r.d));
  put(std::to_string(r.m));
  put(std::string(to_string(r.method)));
  put(std::to_string(r.iterations));
  put(std::to_string(r.master_seed));
  pair(r.r2);
  pair(r.rms);
  pair(r.variability);
  pair(r.bic);
  pair(r.test_rss);
  pair(r.support_ratio);
  pair(r.meta);
  num(r.consensus_meta);
  num(r.rms_consensus);
  put(std::to_string(r.nonconverged_fits));
  put(std::to_string(r.failures));
  std::string msg = r.failure;
  std::replace(msg.begin(), msg.end(), ',', ';');
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  put(msg);
  return os.str();
}

inline ResultRow parse_row(const std::string& line) {
  const auto f = split_fields(line);
  if (f.size() != results_columns().size())
    throw FormatError("results row has " + std::to_string(f.size()) + " fields, expected " +
                      std::to_string(results_columns().size()));
  std::size_t i = 0;
  auto text = [&] { return std::string(f[i++]); };
  auto num = [&] {
    double v = 0.0;
    if (!parse_double(f[i], v)) throw FormatError("bad number '" + std::string(f[i]) + "' in results row");
    ++i;
    return v;
  };
  auto integer = [&] { return static_cast<long long>(num()); };
  auto pair = [&] {
    Summary s;
    s.mean = num();
    s.sd = num();
    return s;
  };
  ResultRow r;
  if (text() != std::to_string(kResultsSchemaVersion)) throw FormatError("unsupported results schema version");
  r.cell_hash = text();
  const auto dist = parse_distribution(f[i++]);
  if (!dist) throw FormatError("bad distribution in results row");
  r.distribution = *dist;
  r.k = integer();
  r.sparsity = num();
  r.sample_ratio = num();
  r.noise_factor = num();
  r.d = integer();
  r.m = integer();
  const auto method = parse_method(f[i++]);
  if (!method) throw FormatError("bad method in results row");
  r.method = *method;
  r.iterations = static_cast<int>(integer());
  {
    const auto s = text();
    std::from_chars(s.data(), s.data() + s.size(), r.master_seed);
  }
  r.r2 = pair();
  r.rms = pair();
  r.variability = pair();
  r.bic = pair();
  r.test_rss = pair();
  r.support_ratio = pair();
  r.meta = pair();
  r.consensus_meta = num();
  r.rms_consensus = num();
  r.nonconverged_fits = static_cast<int>(integer());
  r.failures = static_cast<int>(integer());
  r.failure = text();
  return r;
}

inline std::vector<ResultRow> read_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || std::string(trim(line)) != results_header())
    throw FormatError(path + ": results header does not match schema v" + std::to_string(kResultsSchemaVersion));
  std::vector<ResultRow> rows;
  while (std::getline(in, line))
    if (!trim(line).empty()) rows.push_back(parse_row(std::string(trim(line))));
  return rows;
}

// ---------------------------------------------------------------------------
// benchmark

struct CellTask {
  Distribution distribution;
  double sparsity, sample_ratio, noise_factor;
  Method method;
};

/// Identifies everything a row depends on.
inline std::string cell_hash(const ExperimentGrid& g, const CellTask& t) {
  std::ostringstream os;
  os << "v" << kResultsSchemaVersion << '|' << to_string(t.distribution) << '|' << format_double(t.sparsity) << '|'
     << format_double(t.sample_ratio) << '|' << format_double(t.noise_factor) << '|' << to_string(t.method) << '|'
     << g.k << '|' << g.iterations << '|' << g.master_seed << '|' << g.n_permutations << '|'
     << format_double(g.lambda_min) << '|' << format_double(g.lambda_max) << '|' << g.lambda_points << '|'
     << g.fine_points << '|' << format_double(g.threshold_min) << '|' << format_double(g.threshold_max) << '|'
     << g.threshold_points << '|' << detail::params_yaml(g.params);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(tag(os.str())));
  return buf;
}

/// Seed of a grid cell's synthetic model and data; shared by all methods so
/// they are compared on the same datasets and splits.
inline Seed cell_seed(const ExperimentGrid& g, const CellTask& t) {
  return derive_seed(g.master_seed, {tag(to_string(t.distribution)), tag(t.sparsity), tag(t.sample_ratio),
                                     tag(t.noise_factor), static_cast<std::uint64_t>(g.k)});
}

inline std::vector<CellTask> expand_grid(const ExperimentGrid& g) {
  std::vector<CellTask> tasks;
  for (auto dist : g.distributions)
    for (double s : g.sparsities)
      for (double r : g.sample_ratios)
        for (double c : g.noise_factors)
          for (auto method : g.methods) tasks.push_back({dist, s, r, c, method});
  return tasks;
}

struct CellInstance {
  ModelSpec spec;
  GroundTruth truth;
  Dataset data;
  BootstrapConfig bootstrap;
};

/// Synthetic model, dataset and bootstrap settings of one grid cell.
inline CellInstance cell_instance(const ExperimentGrid& g, const CellTask& t, unsigned workers = 1) {
  ModelSpec spec{t.distribution, g.k, t.sparsity, t.noise_factor, cell_seed(g, t), g.params};
  auto truth = draw_weights(spec);
  auto data = make_dataset(truth, samples_for_ratio(truth.weights.size(), t.sample_ratio),
                           derive_seed(spec.seed, {tag("dataset")}));
  BootstrapConfig cfg;
  cfg.method = t.method;
  cfg.sweep = g.sweep();
  cfg.thresholds = g.thresholds();
  cfg.n_permutations = g.n_permutations;
  cfg.iterations = g.iterations;
  cfg.master_seed = derive_seed(spec.seed, {tag("bootstrap")});
  cfg.workers = workers;
  return {spec, std::move(truth), std::move(data), std::move(cfg)};
}

inline ResultRow run_cell(const ExperimentGrid& g, const CellTask& t, unsigned workers = 1) {
  const auto start = std::chrono::steady_clock::now();
  ResultRow row;
  row.cell_hash = cell_hash(g, t);
  row.distribution = t.distribution;
  row.k = g.k;
  row.sparsity = t.sparsity;
  row.sample_ratio = t.sample_ratio;
  row.noise_factor = t.noise_factor;
  row.method = t.method;
  row.iterations = g.iterations;
  row.master_seed = g.master_seed;
  try {
    ModelSpec spec{t.distribution, g.k, t.sparsity, t.noise_factor, cell_seed(g, t), g.params};
    row.d = spec.dimension();
    row.m = samples_for_ratio(row.d, t.sample_ratio);
    const auto cell = cell_instance(g, t, workers);
    const auto rep = run_bootstrap(cell.data, cell.bootstrap, &cell.truth);
    row.r2 = rep.r2;
    row.rms = rep.rms;
    row.variability = rep.variability;
    row.bic = rep.bic;
    row.test_rss = rep.test_rss;
    row.support_ratio = rep.support_ratio;
    row.meta = rep.chosen_meta;
    row.consensus_meta = rep.consensus_meta;
    row.rms_consensus = rep.rms_consensus;
    row.nonconverged_fits = rep.nonconverged_fits;
    row.failures = rep.failures;
  } catch (const std::exception& e) {
    row.failure = e.what();
    if (row.failure.empty()) row.failure = "unknown error";
  }
  row.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

struct BenchmarkOutcome {
  std::size_t computed = 0;
  std::size_t skipped = 0;
  std::vector<ResultRow> rows;  // newly computed
};

inline bool row_less(const ResultRow& a, const ResultRow& b) {
  auto key = [](const ResultRow& r) {
    return std::make_tuple(static_cast<int>(r.distribution), r.k, r.sparsity, r.sample_ratio, r.noise_factor,
                           static_cast<int>(r.method), r.cell_hash);
  };
  return key(a) < key(b);
}

/// Runs every cell x method not already present (by hash) in `out_path`,
/// merges with the existing rows and rewrites the file in canonical order.
/// Runtimes go to `<out_path>.timing.csv`.
inline BenchmarkOutcome cmd_benchmark(ExperimentGrid g, const fs::path& out_path, unsigned workers = 1,
                                      std::optional<Seed> seed = {}) {
  if (seed) g.master_seed = *seed;
  g.validate();

  std::vector<std::string> existing_lines;
  std::set<std::string> existing_hashes;
  if (fs::exists(out_path)) {
    for (const auto& row : read_results(out_path.string())) {
      existing_hashes.insert(row.cell_hash);
      existing_lines.push_back(format_row(row));
    }
  }

  BenchmarkOutcome outcome;
  std::vector<CellTask> todo;
  for (const auto& t : expand_grid(g)) {
    if (existing_hashes.count(cell_hash(g, t))) ++outcome.skipped;
    else todo.push_back(t);
  }
  if (todo.empty()) return outcome;

  const unsigned outer = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(todo.size())));
  const unsigned inner = std::max(1u, workers / outer);
  outcome.rows.resize(todo.size());
  parallel_for(todo.size(), outer, [&](std::size_t i) { outcome.rows[i] = run_cell(g, todo[i], inner); });
  outcome.computed = todo.size();

  std::vector<ResultRow> all;
  for (const auto& line : existing_lines) all.push_back(parse_row(line));
  all.insert(all.end(), outcome.rows.begin(), outcome.rows.end());
  std::stable_sort(all.begin(), all.end(), row_less);

  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  std::ostringstream os;
  os << results_header() << '\n';
  for (const auto& r : all) os << format_row(r) << '\n';
  write_text(out_path.string(), os.str());

  const fs::path timing = out_path.string() + ".timing.csv";
  const bool fresh = !fs::exists(timing);
  std::ofstream t(timing, std::ios::app);
  if (fresh) t << "cell_hash,method,runtime_s\n";
  for (const auto& r : outcome.rows)
    t << r.cell_hash << ',' << to_string(r.method) << ',' << format_double(r.runtime_seconds) << '\n';
  return outcome;
}

}  // namespace boats::cli
