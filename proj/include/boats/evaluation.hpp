#pragma once

// Benchmark protocol: random train/select/test splits, prediction and
// estimation metrics, and the bootstrap around meta-parameter selection.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "boats/boats.hpp"
#include "boats/model_core.hpp"
#include "boats/parallel.hpp"
#include "boats/random.hpp"
#include "boats/regularizers.hpp"
#include "boats/synthgen.hpp"

namespace boats {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Splits

struct SplitFractions {
  double train = 0.8;
  double select = 0.1;
  double test = 0.1;
};

struct SplitPlan {
  std::vector<Index> train;
  std::vector<Index> select;
  std::vector<Index> test;
};

/// Uniform random partition of [0, m). Part sizes are floor(m * fraction);
/// when the fractions sum to one the rounding remainder joins the train part.
inline SplitPlan make_split(Index m, const SplitFractions& f, Seed seed) {
  if (!(f.train >= 0.0 && f.select >= 0.0 && f.test >= 0.0))
    throw std::invalid_argument("split fractions must be nonnegative");
  const double total = f.train + f.select + f.test;
  if (total > 1.0 + 1e-12) throw std::invalid_argument("split fractions sum to more than 1");

  auto part = [m](double frac) {
    return static_cast<Index>(std::floor(static_cast<double>(m) * frac + 1e-9));
  };
  Index n_select = part(f.select);
  Index n_test = part(f.test);
  Index n_train = part(f.train);
  if (std::abs(total - 1.0) <= 1e-12) n_train = m - n_select - n_test;
  if ((f.train > 0 && n_train < 1) || (f.select > 0 && n_select < 1) || (f.test > 0 && n_test < 1))
    throw std::invalid_argument("m = " + std::to_string(m) + " is too small for a nonempty split");

  std::vector<Index> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(derive_seed(seed, {tag("split")}));
  std::shuffle(perm.begin(), perm.end(), rng);

  SplitPlan plan;
  auto it = perm.begin();
  plan.train.assign(it, it + n_train);
  it += n_train;
  plan.select.assign(it, it + n_select);
  it += n_select;
  plan.test.assign(it, it + n_test);
  std::sort(plan.train.begin(), plan.train.end());
  std::sort(plan.select.begin(), plan.select.end());
  std::sort(plan.test.begin(), plan.test.end());
  return plan;
}

/// Deterministic V-fold partition of a random permutation of [0, m). Fold
/// sizes differ by at most one. Not used by the benchmark protocol.
inline std::vector<std::vector<Index>> make_vfold(Index m, int folds, Seed seed) {
  if (folds < 2 || folds > m) throw std::invalid_argument("V-fold needs 2 <= folds <= m");
  std::vector<Index> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(derive_seed(seed, {tag("vfold")}));
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(folds));
  for (std::size_t i = 0; i < perm.size(); ++i) out[i % out.size()].push_back(perm[i]);
  for (auto& fold : out) std::sort(fold.begin(), fold.end());
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

/// 1 - RSS / sum (y - mean y)^2 on the given data.
inline double r_squared(const WeightVector& weights, const Dataset& test) {
  const Vector& y = test.outputs();
  const double tss = (y.array() - y.mean()).square().sum();
  if (!(tss > 0.0)) throw std::domain_error("R^2 undefined: test outputs are constant");
  return 1.0 - least_squares_loss(weights, test) / tss;
}

inline constexpr double kBicResidualFloor = 1e-300;

/// T ln(RSS / (T-1)) + k ln T with k = ||w||_0. The residual mean square is
/// floored at 1e-300 so perfect fits stay finite.
inline double bic(const WeightVector& weights, const Dataset& test) {
  const Index t = test.samples();
  if (t < 2) throw std::invalid_argument("BIC needs at least 2 test samples");
  const double tt = static_cast<double>(t);
  const double mean_square = std::max(least_squares_loss(weights, test) / (tt - 1.0), kBicResidualFloor);
  return tt * std::log(mean_square) + static_cast<double>(count_nonzero(weights)) * std::log(tt);
}

inline double rms_error(const WeightVector& estimated, const WeightVector& truth) {
  detail::require_dims(estimated.size(), truth.size(), "estimate length", "truth length");
  if (truth.size() == 0) throw DimensionError("rms_error of empty vectors");
  return std::sqrt((estimated - truth).squaredNorm() / static_cast<double>(truth.size()));
}

/// Per-coordinate sample standard deviation (n-1) across estimates.
inline Vector coordinate_sd(std::span<const WeightVector> samples) {
  if (samples.size() < 2) throw std::invalid_argument("variability needs at least 2 samples");
  const Index d = samples.front().size();
  Vector mean = Vector::Zero(d);
  for (const auto& s : samples) {
    detail::require_dims(s.size(), d, "sample length", "first sample length");
    mean += s;
  }
  mean /= static_cast<double>(samples.size());
  Vector ss = Vector::Zero(d);
  for (const auto& s : samples) ss += (s - mean).cwiseAbs2();
  return (ss / static_cast<double>(samples.size() - 1)).cwiseSqrt();
}

/// (1/d) sum_j sd_j.
inline double estimation_variability(std::span<const WeightVector> samples) {
  const Vector sd = coordinate_sd(samples);
  return sd.size() == 0 ? 0.0 : sd.mean();
}

/// ||estimated||_0 / k_true.
inline double support_ratio(const WeightVector& estimated, const GroundTruth& truth) {
  if (truth.support.empty()) throw std::invalid_argument("support ratio needs a nonempty true support");
  return static_cast<double>(count_nonzero(estimated)) / static_cast<double>(truth.support.size());
}

// ---------------------------------------------------------------------------
// Meta-parameter sweeps

inline std::vector<double> logspace(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi >= lo) || points < 1) throw std::invalid_argument("bad logspace bounds");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(points));
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < points; ++i)
    out.push_back(points == 1 ? lo : std::pow(10.0, a + (b - a) * i / (points - 1)));
  return out;
}

struct SweepPlan {
  std::vector<double> coarse_grid;
  double refine_factor = std::sqrt(10.0);  // fine grid spans [center / f, center * f]
  int fine_points = 15;

  /// 13 points over [1e-4, 1e2], refined by 15 points within one grid step.
  static SweepPlan standard() { return {logspace(1e-4, 1e2, 13), std::sqrt(10.0), 15}; }

  /// A single value, no refinement.
  static SweepPlan fixed(double lambda) { return {{lambda}, 1.0, 0}; }

  void validate() const {
    if (coarse_grid.empty()) throw std::invalid_argument("sweep needs at least one lambda");
    for (std::size_t i = 0; i < coarse_grid.size(); ++i) {
      if (!(coarse_grid[i] > 0.0) || !std::isfinite(coarse_grid[i]))
        throw std::invalid_argument("sweep lambdas must be positive and finite");
      if (i > 0 && !(coarse_grid[i] > coarse_grid[i - 1]))
        throw std::invalid_argument("coarse sweep grid must be strictly increasing");
    }
    if (fine_points < 0 || (fine_points > 0 && !(refine_factor > 1.0)))
      throw std::invalid_argument("refinement needs refine_factor > 1");
  }

  bool refines() const { return fine_points > 0 && coarse_grid.size() > 1; }

  /// Fine grid around `center`, without values already on the coarse grid.
  std::vector<double> fine_grid(double center) const {
    std::vector<double> out;
    for (double v : logspace(center / refine_factor, center * refine_factor, fine_points))
      if (std::find(coarse_grid.begin(), coarse_grid.end(), v) == coarse_grid.end()) out.push_back(v);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Bootstrap

struct BootstrapConfig {
  Method method = Method::BoATS;
  SweepPlan sweep = SweepPlan::standard();
  ThresholdGrid thresholds = ThresholdGrid::geometric();
  int n_permutations = 100;
  int iterations = 100;
  SplitFractions fractions{};
  Seed master_seed = 0;
  unsigned workers = 1;
  CoordinateDescentOptions solver{};
  double max_failure_fraction = 0.1;
};

struct Summary {
  double mean = kNaN;
  double sd = kNaN;
};

/// Mean and sample sd (n-1; 0 for a single value) of the finite entries.
inline Summary summarize(std::span<const double> values) {
  std::vector<double> v;
  for (double x : values)
    if (std::isfinite(x)) v.push_back(x);
  Summary s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return s;
}

struct IterationRecord {
  Seed seed = 0;
  bool failed = false;
  std::string error;
  double chosen_meta = kNaN;
  WeightVector weights;  // at this iteration's best meta-parameter
  double test_r2 = kNaN;
  double test_bic = kNaN;
  double test_rss = kNaN;
  Index support_size = 0;
  double rms = kNaN;            // needs ground truth
  double support_ratio = kNaN;  // needs ground truth
  int nonconverged_fits = 0;
  std::vector<double> select_losses;  // aligned with BootstrapReport::grid
  double select_floor = 0.0;
};

struct BootstrapReport {
  Method method = Method::BoATS;
  std::vector<double> grid;  // meta-parameter values evaluated, ascending
  std::vector<double> coarse_grid;
  std::vector<double> fine_grid;
  std::vector<double> mean_select_loss;  // over successful iterations, floored
  std::vector<IterationRecord> per_iteration;

  std::size_t consensus_index = 0;
  double consensus_meta = kNaN;
  WeightVector beta_opt_expected;  // mean weights at the consensus meta-parameter
  std::vector<WeightVector> consensus_weights;

  Summary r2, bic, test_rss, rms, support_ratio, support_size, chosen_meta;
  Summary variability;  // mean = (1/d) sum_j sd_j; sd = spread of sd_j over j
  double rms_consensus = kNaN;
  int failures = 0;
  int nonconverged_fits = 0;
};

namespace detail {

struct GridEvaluation {
  std::vector<double> losses;
  std::vector<WeightVector> weights;
  int nonconverged = 0;
};

struct SplitData {
  Dataset train, select;
  std::optional<Dataset> test;
};

inline SplitData split_data(const Dataset& data, const SplitFractions& fractions, Seed seed) {
  const SplitPlan plan = make_split(data.samples(), fractions, seed);
  if (plan.train.empty() || plan.select.empty())
    throw std::invalid_argument("bootstrap needs nonempty train and select splits");
  SplitData s{data.rows(plan.train), data.rows(plan.select), std::nullopt};
  if (!plan.test.empty()) s.test = data.rows(plan.test);
  return s;
}

inline GridEvaluation evaluate_grid(const BootstrapConfig& cfg, const SplitData& split,
                                    const std::vector<double>& grid, Seed seed) {
  GridEvaluation out;
  std::vector<FitResult> fits;
  switch (cfg.method) {
    case Method::OLS:
      fits.push_back(ols_fit(split.train));
      break;
    case Method::Ridge: {
      const RidgePath path(split.train);
      const double m = static_cast<double>(split.train.samples());
      for (double l : grid) {
        fits.push_back(path.fit(m * l));
        fits.back().meta_parameter = l;
      }
      break;
    }
    case Method::Lasso:
      fits = lasso_path(split.train, grid, cfg.solver);
      break;
    case Method::ElasticNet:
      fits = elastic_net_path(split.train, grid, cfg.solver);
      break;
    case Method::BoATS: {
      const auto null = estimate_null(split.train, cfg.n_permutations, derive_seed(seed, {tag("null")}));
      auto result = boats_fit(split.train, split.select, null, cfg.thresholds);
      for (std::size_t i = 0; i < result.refits.size(); ++i) {
        out.losses.push_back(result.per_threshold_losses[i].select_loss);
        out.weights.push_back(std::move(result.refits[i]));
      }
      return out;
    }
  }
  for (auto& f : fits) {
    if (!f.weights.allFinite()) throw std::runtime_error("solver produced non-finite weights");
    if (!f.diagnostics.converged) ++out.nonconverged;
    out.losses.push_back(least_squares_loss(f.weights, split.select));
    out.weights.push_back(std::move(f.weights));
  }
  return out;
}

}  // namespace detail

/// Bootstrapped cross-validation. Every iteration draws a fresh random
/// split, evaluates the method's meta-parameter grid on the select split and
/// scores its own best fit on the test split. For ridge, lasso and elastic
/// net a second, finer grid is evaluated around the coarse value with the
/// best mean select loss. The consensus meta-parameter minimizes the mean
/// select loss over the union grid; beta_opt_expected averages the
/// per-iteration weights there.
///
/// Iterations that throw are excluded and counted; more than
/// max_failure_fraction of them aborts the run. Results do not depend on
/// cfg.workers.
inline BootstrapReport run_bootstrap(const Dataset& data, const BootstrapConfig& cfg,
                                     const GroundTruth* truth = nullptr) {
  if (cfg.iterations < 1) throw std::invalid_argument("bootstrap needs at least one iteration");
  if (truth) detail::require_dims(truth->weights.size(), data.features(), "ground truth length", "feature count");

  BootstrapReport report;
  report.method = cfg.method;
  switch (cfg.method) {
    case Method::OLS: report.coarse_grid = {0.0}; break;
    case Method::BoATS: report.coarse_grid = cfg.thresholds.multipliers(); break;
    default:
      cfg.sweep.validate();
      report.coarse_grid = cfg.sweep.coarse_grid;
  }

  const auto n_iter = static_cast<std::size_t>(cfg.iterations);
  std::vector<IterationRecord> records(n_iter);
  std::vector<std::vector<WeightVector>> paths(n_iter);

  auto run_pass = [&](const std::vector<double>& grid) {
    parallel_for(n_iter, cfg.workers, [&](std::size_t i) {
      auto& rec = records[i];
      if (rec.failed) return;
      try {
        const auto split = detail::split_data(data, cfg.fractions, rec.seed);
        auto eval = detail::evaluate_grid(cfg, split, grid, rec.seed);
        rec.select_floor = exact_fit_floor(split.select);
        rec.nonconverged_fits += eval.nonconverged;
        rec.select_losses.insert(rec.select_losses.end(), eval.losses.begin(), eval.losses.end());
        for (auto& w : eval.weights) paths[i].push_back(std::move(w));
      } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
      }
    });
  };

  auto mean_losses = [&](const std::vector<double>& grid, double& floor_mean) {
    std::vector<double> mean(grid.size(), 0.0);
    floor_mean = 0.0;
    std::size_t ok = 0;
    for (const auto& rec : records) {
      if (rec.failed) continue;
      ++ok;
      floor_mean += rec.select_floor;
      for (std::size_t g = 0; g < grid.size(); ++g) mean[g] += std::max(rec.select_losses[g], rec.select_floor);
    }
    if (ok == 0) throw std::runtime_error("every bootstrap iteration failed");
    for (auto& v : mean) v /= static_cast<double>(ok);
    floor_mean /= static_cast<double>(ok);
    return mean;
  };

  auto check_failures = [&] {
    int failed = 0;
    std::string first;
    for (const auto& rec : records)
      if (rec.failed && failed++ == 0) first = rec.error;
    if (static_cast<double>(failed) > cfg.max_failure_fraction * static_cast<double>(cfg.iterations))
      throw std::runtime_error(std::to_string(failed) + " of " + std::to_string(cfg.iterations) +
                               " bootstrap iterations failed (first: " + first + ")");
    return failed;
  };

  for (std::size_t i = 0; i < n_iter; ++i)
    records[i].seed = derive_seed(cfg.master_seed, {tag("iteration"), static_cast<std::uint64_t>(i)});

  run_pass(report.coarse_grid);
  check_failures();
  report.grid = report.coarse_grid;

  const bool refine = (cfg.method == Method::Ridge || cfg.method == Method::Lasso ||
                       cfg.method == Method::ElasticNet) &&
                      cfg.sweep.refines();
  if (refine) {
    double floor_mean = 0.0;
    const auto coarse_mean = mean_losses(report.coarse_grid, floor_mean);
    const double center = report.coarse_grid[choose_threshold(coarse_mean, floor_mean)];
    report.fine_grid = cfg.sweep.fine_grid(center);
    if (!report.fine_grid.empty()) {
      run_pass(report.fine_grid);
      report.grid.insert(report.grid.end(), report.fine_grid.begin(), report.fine_grid.end());
    }
  }
  report.failures = check_failures();

  // Put the union grid in ascending order.
  std::vector<std::size_t> order(report.grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return report.grid[a] < report.grid[b]; });
  auto permute = [&order](auto& v) {
    std::remove_reference_t<decltype(v)> sorted;
    sorted.reserve(v.size());
    for (std::size_t o : order) sorted.push_back(std::move(v[o]));
    v = std::move(sorted);
  };
  permute(report.grid);
  for (std::size_t i = 0; i < n_iter; ++i) {
    if (records[i].failed) continue;
    permute(records[i].select_losses);
    permute(paths[i]);
  }

  // Per-iteration choice and held-out metrics.
  parallel_for(n_iter, cfg.workers, [&](std::size_t i) {
    auto& rec = records[i];
    if (rec.failed) return;
    try {
      const std::size_t best = choose_threshold(rec.select_losses, rec.select_floor);
      rec.chosen_meta = report.grid[best];
      rec.weights = paths[i][best];
      rec.support_size = count_nonzero(rec.weights);
      const auto split = detail::split_data(data, cfg.fractions, rec.seed);
      if (split.test) {
        rec.test_rss = least_squares_loss(rec.weights, *split.test);
        rec.test_r2 = r_squared(rec.weights, *split.test);
        if (split.test->samples() >= 2) rec.test_bic = bic(rec.weights, *split.test);
      }
      if (truth) {
        rec.rms = rms_error(rec.weights, truth->weights);
        rec.support_ratio = support_ratio(rec.weights, *truth);
      }
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
    }
  });
  report.failures = check_failures();

  double floor_mean = 0.0;
  report.mean_select_loss = mean_losses(report.grid, floor_mean);
  report.consensus_index = choose_threshold(report.mean_select_loss, floor_mean);
  report.consensus_meta = report.grid[report.consensus_index];

  std::vector<double> r2, bic_v, rss, rms, ratio, size, meta;
  std::vector<WeightVector> best_weights;
  report.beta_opt_expected = WeightVector::Zero(data.features());
  for (std::size_t i = 0; i < n_iter; ++i) {
    const auto& rec = records[i];
    report.nonconverged_fits += rec.nonconverged_fits;
    if (rec.failed) continue;
    r2.push_back(rec.test_r2);
    bic_v.push_back(rec.test_bic);
    rss.push_back(rec.test_rss);
    rms.push_back(rec.rms);
    ratio.push_back(rec.support_ratio);
    size.push_back(static_cast<double>(rec.support_size));
    meta.push_back(rec.chosen_meta);
    best_weights.push_back(rec.weights);
    report.consensus_weights.push_back(paths[i][report.consensus_index]);
    report.beta_opt_expected += report.consensus_weights.back();
  }
  report.beta_opt_expected /= static_cast<double>(best_weights.size());

  report.r2 = summarize(r2);
  report.bic = summarize(bic_v);
  report.test_rss = summarize(rss);
  report.rms = summarize(rms);
  report.support_ratio = summarize(ratio);
  report.support_size = summarize(size);
  report.chosen_meta = summarize(meta);
  if (best_weights.size() >= 2) {
    const Vector sd = coordinate_sd(best_weights);
    std::vector<double> sds(sd.data(), sd.data() + sd.size());
    report.variability.mean = sd.size() ? sd.mean() : 0.0;
    report.variability.sd = summarize(sds).sd;
  }
  if (truth) report.rms_consensus = rms_error(report.beta_opt_expected, truth->weights);

  report.per_iteration = std::move(records);
  return report;
}

}  // namespace boats
