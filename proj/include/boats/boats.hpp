#pragma once

// Adaptive threshold selection with OLS refitting.
//
//   1. null magnitudes: mean |beta| of OLS fits to response-permuted data
//   2. beta_init = OLS on the training split
//   3. for each multiplier t: keep j with |beta_init_j| >= t * null_j,
//      refit the survivors by OLS on the training split
//   4. keep the refit with the smallest select-split loss

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>
#include <optional>

#include "boats/model_core.hpp"
#include "boats/random.hpp"

namespace boats {

struct NullWeightProfile {
  Vector magnitudes;  // expected |beta_null_j|, length d
  int n_permutations = 0;
  Seed seed = 0;
  bool rank_deficient = false;  // any permuted fit was rank deficient
};

/// Candidate threshold multipliers: starts at 0, strictly increasing, finite.
class ThresholdGrid {
 public:
  explicit ThresholdGrid(std::vector<double> multipliers) : multipliers_(std::move(multipliers)) {
    if (multipliers_.empty() || multipliers_.front() != 0.0)
      throw std::invalid_argument("threshold grid must start at 0");
    for (std::size_t i = 1; i < multipliers_.size(); ++i)
      if (!std::isfinite(multipliers_[i]) || !(multipliers_[i] > multipliers_[i - 1]))
        throw std::invalid_argument("threshold grid must be finite and strictly increasing");
  }

  /// {0} plus `points` geometrically spaced multipliers over [lo, hi].
  static ThresholdGrid geometric(double lo = 0.25, double hi = 32.0, int points = 40) {
    if (!(lo > 0.0) || !(hi >= lo) || points < 1)
      throw std::invalid_argument("geometric threshold grid needs 0 < lo <= hi and points >= 1");
    std::vector<double> g{0.0};
    for (int i = 0; i < points; ++i) {
      const double f = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
      g.push_back(lo * std::pow(hi / lo, f));
    }
    return ThresholdGrid(std::move(g));
  }

  const std::vector<double>& multipliers() const noexcept { return multipliers_; }
  std::size_t size() const noexcept { return multipliers_.size(); }

 private:
  std::vector<double> multipliers_;
};

struct ThresholdLoss {
  double multiplier;
  double select_loss;
};

struct BoatsResult {
  WeightVector weights;  // beta_opt
  double chosen_multiplier = 0.0;
  std::size_t chosen_index = 0;
  Index n_zeroed = 0;  // coordinates removed by thresholding at the chosen multiplier
  WeightVector initial_weights;
  std::vector<ThresholdLoss> per_threshold_losses;
  std::vector<bool> refit_flags;        // rank deficiency of each refit
  std::vector<WeightVector> refits;     // beta_sel for every multiplier
  std::vector<Index> support_sizes;
};

/// Permutation null: OLS on (X, pi(y)) for n_permutations uniform random
/// permutations pi, averaging |beta_j|. The design is factorized once.
inline NullWeightProfile estimate_null(const Dataset& data, int n_permutations, Seed seed) {
  if (n_permutations < 1) throw std::invalid_argument("estimate_null needs n_permutations >= 1");
  const LeastSquaresSolver solver(data.inputs());
  NullWeightProfile null;
  null.n_permutations = n_permutations;
  null.seed = seed;
  null.rank_deficient = solver.rank_deficient();
  null.magnitudes = Vector::Zero(data.features());

  std::vector<Index> perm(static_cast<std::size_t>(data.samples()));
  Vector shuffled(data.samples());
  for (int p = 0; p < n_permutations; ++p) {
    std::iota(perm.begin(), perm.end(), Index{0});
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(p)}));
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < perm.size(); ++i) shuffled(static_cast<Index>(i)) = data.outputs()(perm[i]);
    null.magnitudes += solver.solve(shuffled).cwiseAbs();
  }
  null.magnitudes /= static_cast<double>(n_permutations);
  return null;
}

/// Constant profile (|mean(y)| + var(y)) / d, with the unbiased variance.
inline NullWeightProfile moment_null(const Dataset& data) {
  const Index m = data.samples();
  if (m < 2) throw std::invalid_argument("moment_null needs at least 2 samples");
  if (data.features() < 1) throw DimensionError("moment_null needs at least one feature");
  const Vector& y = data.outputs();
  const double mean = y.mean();
  const double var = (y.array() - mean).square().sum() / static_cast<double>(m - 1);
  NullWeightProfile null;
  null.magnitudes = Vector::Constant(data.features(), (std::abs(mean) + var) / static_cast<double>(data.features()));
  return null;
}

/// Coordinates surviving the hard threshold: |init_j| >= multiplier * null_j.
inline Support threshold_weights(const WeightVector& init, const NullWeightProfile& null, double multiplier) {
  detail::require_dims(null.magnitudes.size(), init.size(), "null profile length", "weight length");
  if (!(multiplier >= 0.0)) throw std::invalid_argument("threshold multiplier must be nonnegative");
  std::vector<Index> keep;
  for (Index j = 0; j < init.size(); ++j)
    if (!(std::abs(init(j)) < null.magnitudes(j) * multiplier)) keep.push_back(j);
  return Support(std::move(keep), init.size());
}

/// Relative level below which a select loss counts as an exact fit.
inline constexpr double kExactFitFloor = 1e-20;

/// Index of the preferred threshold given select losses (ordered by
/// increasing multiplier). Losses are floored at `floor`; among exact ties the
/// smallest multiplier wins, except when the minimum is the floor itself
/// (data reproduced to roundoff), where the largest such multiplier wins.
inline std::size_t choose_threshold(const std::vector<double>& losses, double floor) {
  if (losses.empty()) throw std::invalid_argument("no threshold losses to choose from");
  std::size_t best = 0;
  double best_loss = std::max(losses[0], floor);
  for (std::size_t i = 1; i < losses.size(); ++i) {
    const double l = std::max(losses[i], floor);
    if (l < best_loss || (l == best_loss && l == floor)) {
      best = i;
      best_loss = l;
    }
  }
  return best;
}

inline double exact_fit_floor(const Dataset& select) {
  return kExactFitFloor * select.outputs().squaredNorm();
}

inline BoatsResult boats_fit(const Dataset& train, const Dataset& select, const NullWeightProfile& null,
                             const ThresholdGrid& grid) {
  detail::require_dims(select.features(), train.features(), "select feature count", "train feature count");
  detail::require_dims(null.magnitudes.size(), train.features(), "null profile length", "train feature count");

  BoatsResult out;
  out.initial_weights = ols_fit(train).weights;

  const std::size_t n = grid.size();
  out.per_threshold_losses.reserve(n);
  out.refit_flags.reserve(n);
  out.refits.reserve(n);
  out.support_sizes.reserve(n);
  std::vector<double> losses;
  losses.reserve(n);

  // Supports are nested in the multiplier, so consecutive grid points often
  // share a support; refit only when it changes.
  std::optional<Support> previous;
  FitResult refit;
  for (double t : grid.multipliers()) {
    Support s = threshold_weights(out.initial_weights, null, t);
    if (!previous || !(s == *previous)) {
      refit = ols_fit(train, s);
      previous = std::move(s);
    }
    const double loss = least_squares_loss(refit.weights, select);
    losses.push_back(loss);
    out.per_threshold_losses.push_back({t, loss});
    out.refit_flags.push_back(refit.diagnostics.rank_deficient);
    out.refits.push_back(refit.weights);
    out.support_sizes.push_back(previous->size());
  }

  out.chosen_index = choose_threshold(losses, exact_fit_floor(select));
  out.chosen_multiplier = grid.multipliers()[out.chosen_index];
  out.weights = out.refits[out.chosen_index];
  out.n_zeroed = train.features() - out.support_sizes[out.chosen_index];
  return out;
}

}  // namespace boats
