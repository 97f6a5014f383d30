#pragma once

// Synthetic sparse models: k nonzero weights drawn from one of four shapes,
// scattered over d = round(k / (1 - sparsity)) coordinates, standard normal
// inputs and Gaussian noise with variance c * sum|beta|.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "boats/model_core.hpp"
#include "boats/random.hpp"

namespace boats {

enum class Distribution { Laplace, Uniform, SymmetricIncreasingExponential, AsymmetricClustered };

constexpr std::string_view to_string(Distribution d) noexcept {
  switch (d) {
    case Distribution::Laplace: return "laplace";
    case Distribution::Uniform: return "uniform";
    case Distribution::SymmetricIncreasingExponential: return "symmetric_increasing_exponential";
    case Distribution::AsymmetricClustered: return "asymmetric_clustered";
  }
  return "unknown";
}

inline std::optional<Distribution> parse_distribution(std::string_view s) {
  for (auto d : {Distribution::Laplace, Distribution::Uniform, Distribution::SymmetricIncreasingExponential,
                 Distribution::AsymmetricClustered})
    if (s == to_string(d)) return d;
  return std::nullopt;
}

/// Shape parameters of the four weight distributions.
struct DistributionParams {
  double laplace_scale = 1.0;
  double uniform_half_width = 2.0;
  double uniform_dead_zone = 0.05;
  double exponential_peak = 2.0;        // magnitude = peak - E
  double exponential_rate = 1.5;        // E ~ Exp(rate)
  double exponential_truncation = 1.9;  // E restricted to [0, truncation]
  double cluster_high_mean = 2.0;
  double cluster_low_mean = -0.8;
  double cluster_sd = 0.1;
  double cluster_high_fraction = 0.7;
};

struct ModelSpec {
  Distribution distribution = Distribution::AsymmetricClustered;
  Index k = 100;
  double sparsity = 0.0;      // 1 - k/d, in [0, 1)
  double noise_factor = 0.2;  // c in sigma^2 = c * sum|beta|
  Seed seed = 0;
  DistributionParams params{};

  void validate() const {
    if (k < 1) throw std::invalid_argument("k must be a positive integer");
    if (!(sparsity >= 0.0 && sparsity < 1.0))
      throw std::invalid_argument("sparsity must lie in [0, 1)");
    if (!(noise_factor >= 0.0) || !std::isfinite(noise_factor))
      throw std::invalid_argument("noise_factor must be finite and nonnegative");
  }

  Index dimension() const {
    validate();
    const auto d = static_cast<Index>(std::llround(static_cast<double>(k) / (1.0 - sparsity)));
    return std::max(d, k);
  }
};

struct GroundTruth {
  WeightVector weights;
  Support support;
  double noise_sigma = 0.0;
};

/// sqrt(c * sum_j |beta_j|).
inline double noise_sigma_for(double noise_factor, const WeightVector& weights) {
  if (!(noise_factor >= 0.0)) throw std::invalid_argument("noise factor must be nonnegative");
  if (!weights.allFinite()) throw std::invalid_argument("weights must be finite");
  return std::sqrt(noise_factor * weights.lpNorm<1>());
}

inline double noise_sigma_for(const ModelSpec& spec, const WeightVector& weights) {
  return noise_sigma_for(spec.noise_factor, weights);
}

namespace detail {

inline double draw_nonzero(Distribution dist, const DistributionParams& p, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (;;) {
    double v = 0.0;
    switch (dist) {
      case Distribution::Laplace: {
        const double u = unit(rng) - 0.5;
        v = -p.laplace_scale * (u < 0 ? -1.0 : 1.0) * std::log1p(-2.0 * std::abs(u));
        break;
      }
      case Distribution::Uniform: {
        v = -p.uniform_half_width + 2.0 * p.uniform_half_width * unit(rng);
        if (std::abs(v) < p.uniform_dead_zone) continue;
        break;
      }
      case Distribution::SymmetricIncreasingExponential: {
        const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
        std::exponential_distribution<double> e(p.exponential_rate);
        const double draw = e(rng);
        if (draw > p.exponential_truncation) continue;
        v = sign * (p.exponential_peak - draw);
        break;
      }
      case Distribution::AsymmetricClustered: {
        const bool high = unit(rng) < p.cluster_high_fraction;
        std::normal_distribution<double> n(high ? p.cluster_high_mean : p.cluster_low_mean, p.cluster_sd);
        v = n(rng);
        break;
      }
    }
    if (v != 0.0 && std::isfinite(v)) return v;
  }
}

}  // namespace detail

/// k nonzero weights at uniformly random coordinates of a length-d vector.
inline GroundTruth draw_weights(const ModelSpec& spec) {
  const Index d = spec.dimension();
  Rng rng(derive_seed(spec.seed, {tag("weights")}));

  std::vector<Index> coords(static_cast<std::size_t>(d));
  std::iota(coords.begin(), coords.end(), Index{0});
  std::shuffle(coords.begin(), coords.end(), rng);
  coords.resize(static_cast<std::size_t>(spec.k));
  std::sort(coords.begin(), coords.end());

  GroundTruth truth;
  truth.weights = WeightVector::Zero(d);
  for (Index j : coords) truth.weights(j) = detail::draw_nonzero(spec.distribution, spec.params, rng);
  truth.support = Support(std::move(coords), d);
  truth.noise_sigma = noise_sigma_for(spec, truth.weights);
  return truth;
}

/// m samples with i.i.d. standard normal inputs and y = X beta + noise.
inline Dataset make_dataset(const GroundTruth& truth, Index m, Seed seed) {
  if (m < 1) throw std::invalid_argument("make_dataset needs m >= 1");
  const Index d = truth.weights.size();
  Rng rng(derive_seed(seed, {tag("inputs")}));
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(m, d);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < d; ++j) x(i, j) = normal(rng);
  Vector y = generate_responses(truth.weights, x, truth.noise_sigma, derive_seed(seed, {tag("noise")}));
  return Dataset(std::move(x), std::move(y));
}

/// Sample count for a ratio m/d.
inline Index samples_for_ratio(Index d, double ratio) {
  if (!(ratio > 0.0)) throw std::invalid_argument("sample ratio must be positive");
  const auto m = static_cast<Index>(std::llround(ratio * static_cast<double>(d)));
  if (m < 1) throw std::invalid_argument("sample ratio yields zero samples");
  return m;
}

}  // namespace boats
