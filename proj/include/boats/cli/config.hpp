#pragma once

// Experiment configuration files: a flat YAML mapping of scalars and lists.
// Unknown keys are rejected.
//
// Dataset config (generate):
//   distribution: asymmetric_clustered
//   k: 100
//   sparsity: 0.6666666666666666
//   sample_ratio: 5
//   noise_factor: 0.2
//   seed: 1
//
// Grid config (benchmark):
//   k: 20
//   iterations: 20
//   master_seed: 1
//   distributions: [asymmetric_clustered]
//   sparsities: [0.66]
//   sample_ratios: [5]
//   noise_factors: [0, 0.2]
//   methods: [ridge, lasso, elastic_net, boats]
//
// Both accept the distribution shape overrides (laplace_scale, ...); the grid
// config also accepts sweep settings (see ExperimentGrid).

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "boats/cli/csv.hpp"
#include "boats/evaluation.hpp"
#include "boats/synthgen.hpp"

namespace boats::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetConfig {
  ModelSpec spec;
  double sample_ratio = 5.0;
};

struct ExperimentGrid {
  Index k = 100;
  int iterations = 100;
  Seed master_seed = 1;
  std::vector<Distribution> distributions;
  std::vector<double> sparsities;
  std::vector<double> sample_ratios;
  std::vector<double> noise_factors;
  std::vector<Method> methods;

  int n_permutations = 100;
  double lambda_min = 1e-4;
  double lambda_max = 1e2;
  int lambda_points = 13;
  int fine_points = 15;
  double threshold_min = 0.25;
  double threshold_max = 32.0;
  int threshold_points = 40;
  DistributionParams params{};

  void validate() const;

  SweepPlan sweep() const {
    SweepPlan plan{logspace(lambda_min, lambda_max, lambda_points), 1.0, fine_points};
    plan.refine_factor = lambda_points > 1 ? std::pow(lambda_max / lambda_min, 1.0 / (lambda_points - 1)) : 10.0;
    return plan;
  }

  ThresholdGrid thresholds() const { return ThresholdGrid::geometric(threshold_min, threshold_max, threshold_points); }
};

namespace detail {

inline double scalar_double(const YAML::Node& n, const std::string& key) {
  double v = 0.0;
  if (!n.IsScalar() || !parse_double(n.Scalar(), v) || !std::isfinite(v))
    throw ConfigError("config field '" + key + "' must be a finite number");
  return v;
}

inline long long scalar_int(const YAML::Node& n, const std::string& key) {
  const double v = scalar_double(n, key);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) throw ConfigError("config field '" + key + "' must be an integer");
  return static_cast<long long>(v);
}

inline Seed scalar_seed(const YAML::Node& n, const std::string& key) {
  std::uint64_t v = 0;
  const std::string s = n.IsScalar() ? n.Scalar() : std::string();
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError("config field '" + key + "' must be a nonnegative integer");
  return v;
}

template <class T, class Parse>
std::vector<T> list_of(const YAML::Node& n, const std::string& key, Parse&& parse) {
  std::vector<T> out;
  if (n.IsScalar()) {
    out.push_back(parse(n));
  } else if (n.IsSequence()) {
    for (const auto& item : n) out.push_back(parse(item));
  } else {
    throw ConfigError("config field '" + key + "' must be a list");
  }
  if (out.empty()) throw ConfigError("config field '" + key + "' must not be empty");
  return out;
}

inline Distribution distribution_of(const YAML::Node& n, const std::string& key) {
  const auto d = n.IsScalar() ? parse_distribution(n.Scalar()) : std::nullopt;
  if (!d)
    throw ConfigError("config field '" + key +
                      "' must be one of laplace, uniform, symmetric_increasing_exponential, asymmetric_clustered");
  return *d;
}

inline Method method_of(const YAML::Node& n, const std::string& key) {
  const auto m = n.IsScalar() ? parse_method(n.Scalar()) : std::nullopt;
  if (!m) throw ConfigError("config field '" + key + "' must be one of ols, ridge, lasso, elastic_net, boats");
  return *m;
}

using FieldSetter = std::function<void(const YAML::Node&, const std::string&)>;

inline void add_params(std::map<std::string, FieldSetter>& f, DistributionParams& p) {
  auto real = [&f](const char* name, double& slot) {
    f[name] = [&slot](const YAML::Node& n, const std::string& k) { slot = scalar_double(n, k); };
  };
  real("laplace_scale", p.laplace_scale);
  real("uniform_half_width", p.uniform_half_width);
  real("uniform_dead_zone", p.uniform_dead_zone);
  real("exponential_peak", p.exponential_peak);
  real("exponential_rate", p.exponential_rate);
  real("exponential_truncation", p.exponential_truncation);
  real("cluster_high_mean", p.cluster_high_mean);
  real("cluster_low_mean", p.cluster_low_mean);
  real("cluster_sd", p.cluster_sd);
  real("cluster_high_fraction", p.cluster_high_fraction);
}

inline void apply_fields(const YAML::Node& root, const std::map<std::string, FieldSetter>& fields,
                         const std::vector<std::string>& required) {
  if (!root.IsMap()) throw ConfigError("config must be a mapping of key: value pairs");
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    const auto it = fields.find(key);
    if (it == fields.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(kv.second, key);
  }
  for (const auto& key : required)
    if (!root[key]) throw ConfigError("missing config key '" + key + "'");
}

inline YAML::Node parse_yaml(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
}

inline void validate_params(const DistributionParams& p) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string("config field '") + name + "' must be positive");
  };
  positive(p.laplace_scale, "laplace_scale");
  positive(p.uniform_half_width, "uniform_half_width");
  positive(p.exponential_rate, "exponential_rate");
  positive(p.exponential_truncation, "exponential_truncation");
  positive(p.cluster_sd, "cluster_sd");
  if (!(p.uniform_dead_zone >= 0.0 && p.uniform_dead_zone < p.uniform_half_width))
    throw ConfigError("config field 'uniform_dead_zone' must lie in [0, uniform_half_width)");
  if (!(p.cluster_high_fraction >= 0.0 && p.cluster_high_fraction <= 1.0))
    throw ConfigError("config field 'cluster_high_fraction' must lie in [0, 1]");
}

inline void validate_sparsity(double s, const char* key) {
  if (!(s >= 0.0 && s < 1.0))
    throw ConfigError(std::string("config field '") + key + "' must lie in [0, 1) (d = k / (1 - sparsity))");
}

}  // namespace detail

inline DatasetConfig parse_dataset_config(const std::string& text) {
  DatasetConfig cfg;
  std::map<std::string, detail::FieldSetter> f;
  f["distribution"] = [&](const YAML::Node& n, const std::string& k) { cfg.spec.distribution = detail::distribution_of(n, k); };
  f["k"] = [&](const YAML::Node& n, const std::string& k) { cfg.spec.k = detail::scalar_int(n, k); };
  f["sparsity"] = [&](const YAML::Node& n, const std::string& k) { cfg.spec.sparsity = detail::scalar_double(n, k); };
  f["sample_ratio"] = [&](const YAML::Node& n, const std::string& k) { cfg.sample_ratio = detail::scalar_double(n, k); };
  f["noise_factor"] = [&](const YAML::Node& n, const std::string& k) { cfg.spec.noise_factor = detail::scalar_double(n, k); };
  f["seed"] = [&](const YAML::Node& n, const std::string& k) { cfg.spec.seed = detail::scalar_seed(n, k); };
  detail::add_params(f, cfg.spec.params);
  detail::apply_fields(detail::parse_yaml(text), f, {"distribution", "k", "sparsity", "sample_ratio", "seed"});

  if (cfg.spec.k < 1) throw ConfigError("config field 'k' must be a positive integer");
  detail::validate_sparsity(cfg.spec.sparsity, "sparsity");
  if (!(cfg.sample_ratio > 0.0)) throw ConfigError("config field 'sample_ratio' must be positive");
  if (!(cfg.spec.noise_factor >= 0.0)) throw ConfigError("config field 'noise_factor' must be nonnegative");
  detail::validate_params(cfg.spec.params);
  return cfg;
}

inline void ExperimentGrid::validate() const {
  if (k < 1) throw ConfigError("config field 'k' must be a positive integer");
  if (iterations < 1) throw ConfigError("config field 'iterations' must be a positive integer");
  if (n_permutations < 1) throw ConfigError("config field 'n_permutations' must be a positive integer");
  if (distributions.empty() || sparsities.empty() || sample_ratios.empty() || noise_factors.empty() || methods.empty())
    throw ConfigError("grid lists must all be nonempty");
  for (double s : sparsities) detail::validate_sparsity(s, "sparsities");
  for (double r : sample_ratios)
    if (!(r > 0.0)) throw ConfigError("config field 'sample_ratios' must be positive");
  for (double c : noise_factors)
    if (!(c >= 0.0)) throw ConfigError("config field 'noise_factors' must be nonnegative");
  if (!(lambda_min > 0.0) || !(lambda_max > lambda_min) || lambda_points < 2)
    throw ConfigError("lambda sweep needs 0 < lambda_min < lambda_max and lambda_points >= 2");
  if (fine_points < 0) throw ConfigError("config field 'fine_points' must be nonnegative");
  if (!(threshold_min > 0.0) || !(threshold_max >= threshold_min) || threshold_points < 1)
    throw ConfigError("threshold sweep needs 0 < threshold_min <= threshold_max and threshold_points >= 1");
  detail::validate_params(params);
  for (double s : sparsities) {
    const ModelSpec spec{distributions.front(), k, s};
    for (double r : sample_ratios)
      if (samples_for_ratio(spec.dimension(), r) < 1) throw ConfigError("grid cell has no samples");
  }
}

inline ExperimentGrid parse_grid_config(const std::string& text) {
  ExperimentGrid g;
  std::map<std::string, detail::FieldSetter> f;
  auto integer = [&f](const char* name, auto& slot) {
    f[name] = [&slot](const YAML::Node& n, const std::string& k) {
      slot = static_cast<std::remove_reference_t<decltype(slot)>>(detail::scalar_int(n, k));
    };
  };
  auto real = [&f](const char* name, double& slot) {
    f[name] = [&slot](const YAML::Node& n, const std::string& k) { slot = detail::scalar_double(n, k); };
  };
  auto reals = [&f](const char* name, std::vector<double>& slot) {
    f[name] = [&slot](const YAML::Node& n, const std::string& k) {
      slot = detail::list_of<double>(n, k, [&k](const YAML::Node& item) { return detail::scalar_double(item, k); });
    };
  };
  integer("k", g.k);
  integer("iterations", g.iterations);
  f["master_seed"] = [&g](const YAML::Node& n, const std::string& k) { g.master_seed = detail::scalar_seed(n, k); };
  f["distributions"] = [&g](const YAML::Node& n, const std::string& k) {
    g.distributions = detail::list_of<Distribution>(n, k, [&k](const YAML::Node& i) { return detail::distribution_of(i, k); });
  };
  f["methods"] = [&g](const YAML::Node& n, const std::string& k) {
    g.methods = detail::list_of<Method>(n, k, [&k](const YAML::Node& i) { return detail::method_of(i, k); });
  };
  reals("sparsities", g.sparsities);
  reals("sample_ratios", g.sample_ratios);
  reals("noise_factors", g.noise_factors);
  integer("n_permutations", g.n_permutations);
  real("lambda_min", g.lambda_min);
  real("lambda_max", g.lambda_max);
  integer("lambda_points", g.lambda_points);
  integer("fine_points", g.fine_points);
  real("threshold_min", g.threshold_min);
  real("threshold_max", g.threshold_max);
  integer("threshold_points", g.threshold_points);
  detail::add_params(f, g.params);
  detail::apply_fields(detail::parse_yaml(text), f,
                       {"k", "iterations", "master_seed", "distributions", "sparsities", "sample_ratios",
                        "noise_factors", "methods"});
  g.validate();
  return g;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace detail {

template <class T, class Fmt>
std::string yaml_list(const std::vector<T>& v, Fmt&& fmt) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + "]";
}

inline std::string params_yaml(const DistributionParams& p) {
  const DistributionParams def{};
  std::ostringstream os;
  auto line = [&os](const char* name, double v, double d) {
    if (v != d) os << name << ": " << format_double(v) << '\n';
  };
  line("laplace_scale", p.laplace_scale, def.laplace_scale);
  line("uniform_half_width", p.uniform_half_width, def.uniform_half_width);
  line("uniform_dead_zone", p.uniform_dead_zone, def.uniform_dead_zone);
  line("exponential_peak", p.exponential_peak, def.exponential_peak);
  line("exponential_rate", p.exponential_rate, def.exponential_rate);
  line("exponential_truncation", p.exponential_truncation, def.exponential_truncation);
  line("cluster_high_mean", p.cluster_high_mean, def.cluster_high_mean);
  line("cluster_low_mean", p.cluster_low_mean, def.cluster_low_mean);
  line("cluster_sd", p.cluster_sd, def.cluster_sd);
  line("cluster_high_fraction", p.cluster_high_fraction, def.cluster_high_fraction);
  return os.str();
}

}  // namespace detail

inline std::string dataset_config_yaml(const DatasetConfig& cfg) {
  std::ostringstream os;
  os << "distribution: " << to_string(cfg.spec.distribution) << '\n'
     << "k: " << cfg.spec.k << '\n'
     << "sparsity: " << format_double(cfg.spec.sparsity) << '\n'
     << "sample_ratio: " << format_double(cfg.sample_ratio) << '\n'
     << "noise_factor: " << format_double(cfg.spec.noise_factor) << '\n'
     << "seed: " << cfg.spec.seed << '\n'
     << detail::params_yaml(cfg.spec.params);
  return os.str();
}

inline std::string grid_config_yaml(const ExperimentGrid& g) {
  const ExperimentGrid def{};
  auto fmt = [](double v) { return format_double(v); };
  std::ostringstream os;
  os << "k: " << g.k << '\n'
     << "iterations: " << g.iterations << '\n'
     << "master_seed: " << g.master_seed << '\n'
     << "distributions: "
     << detail::yaml_list(g.distributions, [](Distribution d) { return std::string(to_string(d)); }) << '\n'
     << "sparsities: " << detail::yaml_list(g.sparsities, fmt) << '\n'
     << "sample_ratios: " << detail::yaml_list(g.sample_ratios, fmt) << '\n'
     << "noise_factors: " << detail::yaml_list(g.noise_factors, fmt) << '\n'
     << "methods: " << detail::yaml_list(g.methods, [](Method m) { return std::string(to_string(m)); }) << '\n';
  if (g.n_permutations != def.n_permutations) os << "n_permutations: " << g.n_permutations << '\n';
  if (g.lambda_min != def.lambda_min) os << "lambda_min: " << format_double(g.lambda_min) << '\n';
  if (g.lambda_max != def.lambda_max) os << "lambda_max: " << format_double(g.lambda_max) << '\n';
  if (g.lambda_points != def.lambda_points) os << "lambda_points: " << g.lambda_points << '\n';
  if (g.fine_points != def.fine_points) os << "fine_points: " << g.fine_points << '\n';
  if (g.threshold_min != def.threshold_min) os << "threshold_min: " << format_double(g.threshold_min) << '\n';
  if (g.threshold_max != def.threshold_max) os << "threshold_max: " << format_double(g.threshold_max) << '\n';
  if (g.threshold_points != def.threshold_points) os << "threshold_points: " << g.threshold_points << '\n';
  os << detail::params_yaml(g.params);
  return os.str();
}

enum class PresetScale { Full, Desk };

/// Named experiment grids. Desk scale keeps the grid
/// and shrinks k to 20 and the bootstrap to 20 iterations.
inline ExperimentGrid preset(const std::string& name, PresetScale scale = PresetScale::Full) {
  const std::vector<Method> all{Method::Ridge, Method::Lasso, Method::ElasticNet, Method::BoATS};
  const std::vector<double> sparsity_sweep{0.2, 0.4, 0.5, 2.0 / 3.0, 0.8, 0.9};
  ExperimentGrid g;
  g.methods = all;
  g.noise_factors = {0.2};
  if (name == "fig2" || name == "desk") {
    g.distributions = {Distribution::SymmetricIncreasingExponential};
    g.sparsities = {2.0 / 3.0};
    g.sample_ratios = {5.0};
    if (name == "desk") scale = PresetScale::Desk;
  } else if (name == "fig3") {
    g.distributions = {Distribution::SymmetricIncreasingExponential};
    g.sparsities = sparsity_sweep;
    g.sample_ratios = {1.0, 2.0, 3.0, 5.0, 8.0};
  } else if (name == "fig4") {
    g.distributions = {Distribution::Laplace, Distribution::Uniform, Distribution::SymmetricIncreasingExponential,
                       Distribution::AsymmetricClustered};
    g.sparsities = sparsity_sweep;
    g.sample_ratios = {3.0};
  } else if (name == "fig5") {
    g.distributions = {Distribution::AsymmetricClustered};
    g.sparsities = {0.66};
    g.sample_ratios = {5.0};
    g.noise_factors = {0.0, 0.02, 0.05, 0.1, 0.2, 0.5};
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected fig2, fig3, fig4, fig5 or desk)");
  }
  if (scale == PresetScale::Desk) {
    g.k = 20;
    g.iterations = 20;
  }
  g.validate();
  return g;
}

}  // namespace boats::cli
