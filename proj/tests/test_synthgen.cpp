#include <gtest/gtest.h>

#include "boats/synthgen.hpp"
#include "oracles.hpp"

using namespace boats;

namespace {

ModelSpec spec_of(Distribution dist, Index k, double sparsity, double c = 0.2, Seed seed = 1) {
  ModelSpec s;
  s.distribution = dist;
  s.k = k;
  s.sparsity = sparsity;
  s.noise_factor = c;
  s.seed = seed;
  return s;
}

std::vector<double> nonzeros(const GroundTruth& t) {
  std::vector<double> v;
  for (Index j : t.support.indices()) v.push_back(t.weights(j));
  return v;
}

}  // namespace

TEST(DrawWeights, ZeroSparsityIsDense) {
  const auto t = draw_weights(spec_of(Distribution::Laplace, 50, 0.0));
  EXPECT_EQ(t.weights.size(), 50);
  EXPECT_EQ(count_nonzero(t.weights), 50);
}

TEST(DrawWeights, TwoThirdsSparsity) {
  const auto t = draw_weights(spec_of(Distribution::AsymmetricClustered, 100, 2.0 / 3.0));
  EXPECT_EQ(t.weights.size(), 300);
  EXPECT_EQ(count_nonzero(t.weights), 100);
  EXPECT_EQ(t.support, Support::nonzero(t.weights));
}

TEST(DrawWeights, DimensionNonDecreasingInSparsity) {
  Index prev = 0;
  for (double s : {0.0, 0.2, 0.4, 0.5, 0.66, 2.0 / 3.0, 0.8, 0.9, 0.95}) {
    const Index d = spec_of(Distribution::Uniform, 20, s).dimension();
    EXPECT_GE(d, prev) << s;
    EXPECT_GE(d, 20);
    prev = d;
  }
  EXPECT_EQ(spec_of(Distribution::Uniform, 20, 0.66).dimension(), 59);
  EXPECT_THROW(spec_of(Distribution::Uniform, 20, 1.0).dimension(), std::invalid_argument);
}

TEST(DrawWeights, LaplaceMatchesReferenceCdf) {
  const auto t = draw_weights(spec_of(Distribution::Laplace, 10000, 0.0, 0.0, 5));
  const auto v = nonzeros(t);
  const double ks = oracle::ks_statistic(v, [](double x) {
    return x < 0 ? 0.5 * std::exp(x) : 1.0 - 0.5 * std::exp(-x);
  });
  EXPECT_LT(ks, 0.02);
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  EXPECT_LT(std::abs(mean), 3.0 * std::sqrt(2.0 / static_cast<double>(v.size())));
}

TEST(DrawWeights, UniformRespectsRangeAndDeadZone) {
  const auto v = nonzeros(draw_weights(spec_of(Distribution::Uniform, 5000, 0.0, 0.0, 6)));
  for (double x : v) {
    EXPECT_LE(std::abs(x), 2.0);
    EXPECT_GE(std::abs(x), 0.05);
  }
  const double ks = oracle::ks_statistic(v, [](double x) {
    // Uniform on [-2, -0.05] u [0.05, 2].
    const double w = 1.95;
    if (x <= -0.05) return (x + 2.0) / (2 * w);
    if (x < 0.05) return 0.5;
    return 0.5 + (x - 0.05) / (2 * w);
  });
  EXPECT_LT(ks, 0.03);
}

TEST(DrawWeights, ExponentialMassSitsNearThePeak) {
  const auto v = nonzeros(draw_weights(spec_of(Distribution::SymmetricIncreasingExponential, 5000, 0.0, 0.0, 7)));
  int positive = 0, large = 0;
  for (double x : v) {
    EXPECT_GE(std::abs(x), 0.1 - 1e-12);
    EXPECT_LE(std::abs(x), 2.0);
    positive += x > 0;
    large += std::abs(x) > 1.0;
  }
  // P(|beta| > 1) = P(E < 1 | E <= 1.9) = (1 - e^-1.5) / (1 - e^-2.85).
  const double expect = (1.0 - std::exp(-1.5)) / (1.0 - std::exp(-2.85));
  EXPECT_NEAR(large / 5000.0, expect, 0.03);
  EXPECT_NEAR(positive / 5000.0, 0.5, 0.03);
}

TEST(DrawWeights, ClusteredMixtureProportions) {
  const auto v = nonzeros(draw_weights(spec_of(Distribution::AsymmetricClustered, 5000, 0.0, 0.0, 8)));
  int high = 0;
  for (double x : v) {
    const bool h = x > 0.6;
    high += h;
    EXPECT_LT(std::abs(x - (h ? 2.0 : -0.8)), 0.6);
  }
  EXPECT_NEAR(high / 5000.0, 0.7, 0.03);
}

TEST(DrawWeights, DeterministicPerSeed) {
  const auto s = spec_of(Distribution::Laplace, 30, 0.5, 0.2, 42);
  EXPECT_EQ(draw_weights(s).weights, draw_weights(s).weights);
  auto other = s;
  other.seed = 43;
  EXPECT_NE(draw_weights(s).weights, draw_weights(other).weights);
}

TEST(NoiseSigma, Examples) {
  EXPECT_DOUBLE_EQ(noise_sigma_for(0.2, (Vector(3) << 1.0, -2.0, 2.0).finished()), 1.0);
  EXPECT_EQ(noise_sigma_for(0.0, Vector::Ones(4)), 0.0);
  EXPECT_DOUBLE_EQ(noise_sigma_for(0.5, Vector::Constant(2, -4.0)), 2.0);
  EXPECT_THROW(noise_sigma_for(-0.1, Vector::Ones(2)), std::invalid_argument);
}

TEST(MakeDataset, NoiselessResponsesAreExact) {
  const auto t = draw_weights(spec_of(Distribution::Uniform, 10, 0.5, 0.0, 3));
  const auto data = make_dataset(t, 100, 9);
  EXPECT_EQ(data.outputs(), data.inputs() * t.weights);
}

TEST(MakeDataset, StandardNormalInputs) {
  const auto t = draw_weights(spec_of(Distribution::Laplace, 5, 0.0, 0.2, 4));
  const auto data = make_dataset(t, 20000, 10);
  for (Index j = 0; j < 5; ++j) {
    const auto col = data.inputs().col(j);
    EXPECT_LT(std::abs(col.mean()), 4.0 / std::sqrt(20000.0));
    EXPECT_NEAR(col.squaredNorm() / 20000.0, 1.0, 0.05);
  }
  const Vector resid = data.outputs() - data.inputs() * t.weights;
  EXPECT_NEAR(std::sqrt(resid.squaredNorm() / 20000.0), t.noise_sigma, 0.05 * t.noise_sigma);
}

TEST(MakeDataset, DeterministicPerSeed) {
  const auto t = draw_weights(spec_of(Distribution::Laplace, 5, 0.5));
  const auto a = make_dataset(t, 40, 77), b = make_dataset(t, 40, 77);
  EXPECT_EQ(a.inputs(), b.inputs());
  EXPECT_EQ(a.outputs(), b.outputs());
}

TEST(SamplesForRatio, RoundsToNearest) {
  EXPECT_EQ(samples_for_ratio(300, 5.0), 1500);
  EXPECT_EQ(samples_for_ratio(59, 1.0), 59);
  EXPECT_EQ(samples_for_ratio(3, 0.5), 2);
  EXPECT_THROW(samples_for_ratio(10, 0.0), std::invalid_argument);
}

TEST(Distribution, NamesRoundTrip) {
  for (auto d : {Distribution::Laplace, Distribution::Uniform, Distribution::SymmetricIncreasingExponential,
                 Distribution::AsymmetricClustered})
    EXPECT_EQ(parse_distribution(to_string(d)), d);
  EXPECT_FALSE(parse_distribution("gaussian"));
}
