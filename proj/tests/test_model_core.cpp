#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "boats/model_core.hpp"
#include "oracles.hpp"

using namespace boats;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index i = 0;
  for (const auto& r : rows) {
    Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST(Predict, ScalesSingleFeature) {
  EXPECT_EQ(predict(vec({2}), mat({{1}, {2}, {3}})), vec({2, 4, 6}));
}

TEST(Predict, ZeroWeightsGiveZeros) {
  std::mt19937_64 rng(3);
  const Matrix x = oracle::random_matrix(7, 5, rng);
  EXPECT_EQ(predict(WeightVector::Zero(5), x), Vector::Zero(7));
}

TEST(Predict, Cancellation) { EXPECT_EQ(predict(vec({1, -1}), mat({{3, 3}})), vec({0})); }

TEST(Predict, DimensionMismatchNamesBothSizes) {
  try {
    predict(vec({1, 2, 3}), Matrix::Zero(4, 2));
    FAIL();
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('2'), std::string::npos);
    EXPECT_NE(msg.find('3'), std::string::npos);
  }
}

TEST(Predict, IsLinear) {
  std::mt19937_64 rng(11);
  const Matrix x = oracle::random_matrix(20, 6, rng);
  const Vector b1 = oracle::random_vector(6, rng), b2 = oracle::random_vector(6, rng);
  const double a = 1.7, b = -0.3;
  const Vector lhs = predict(a * b1 + b * b2, x);
  const Vector rhs = a * predict(b1, x) + b * predict(b2, x);
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LeastSquaresLoss, PerfectFitIsZero) {
  std::mt19937_64 rng(1);
  const Matrix x = oracle::random_matrix(10, 3, rng);
  const Vector w = vec({1, -2, 0.5});
  EXPECT_EQ(least_squares_loss(w, Dataset(x, x * w)), 0.0);
}

TEST(LeastSquaresLoss, SumOfSquares) {
  EXPECT_DOUBLE_EQ(least_squares_loss(vec({0}), Dataset(mat({{1}, {1}}), vec({1, -1}))), 2.0);
}

TEST(LeastSquaresLoss, MatchesNaiveDoubleLoop) {
  std::mt19937_64 rng(42);
  const Matrix x = oracle::random_matrix(4, 3, rng);
  const Vector y = oracle::random_vector(4, rng), w = oracle::random_vector(3, rng);
  EXPECT_NEAR(least_squares_loss(w, Dataset(x, y)), oracle::naive_rss(w, x, y), 1e-12);
}

TEST(Dataset, RejectsMismatchedAndNonFinite) {
  EXPECT_THROW(Dataset(Matrix::Zero(3, 2), Vector::Zero(2)), DimensionError);
  Matrix x = Matrix::Zero(2, 2);
  x(0, 0) = std::nan("");
  EXPECT_THROW(Dataset(x, Vector::Zero(2)), std::invalid_argument);
}

TEST(Support, ValidatesIndices) {
  EXPECT_NO_THROW(Support({0, 2, 4}, 5));
  EXPECT_THROW(Support({2, 1}, 5), std::invalid_argument);
  EXPECT_THROW(Support({1, 1}, 5), std::invalid_argument);
  EXPECT_THROW(Support({5}, 5), std::out_of_range);
  const Support s = Support::nonzero(vec({0, 3, 0, -1}));
  EXPECT_EQ(s.indices(), (std::vector<Index>{1, 3}));
  EXPECT_EQ(s.size(), 2);
}

TEST(OlsFit, IdentityDesign) {
  const auto fit = ols_fit(Dataset(Matrix::Identity(3, 3), vec({1, 2, 3})));
  EXPECT_LE((fit.weights - vec({1, 2, 3})).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_FALSE(fit.diagnostics.rank_deficient);
}

TEST(OlsFit, RecoversNoiselessWeights) {
  std::mt19937_64 rng(5);
  const Matrix x = oracle::random_matrix(500, 8, rng);
  const Vector beta = oracle::random_vector(8, rng);
  const auto fit = ols_fit(Dataset(x, x * beta));
  EXPECT_LE((fit.weights - beta).norm() / beta.norm(), 1e-8);
}

TEST(OlsFit, MatchesNormalEquationOracle) {
  std::mt19937_64 rng(9);
  const Matrix x = oracle::random_matrix(50, 10, rng);
  const Vector y = oracle::random_vector(50, rng);
  const auto fit = ols_fit(Dataset(x, y));
  EXPECT_LE((fit.weights - oracle::normal_equations(x, y)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(OlsFit, SupportLeavesExactZeros) {
  std::mt19937_64 rng(13);
  const Matrix x = oracle::random_matrix(40, 6, rng);
  const Vector y = oracle::random_vector(40, rng);
  const Support s({1, 4}, 6);
  const auto fit = ols_fit(Dataset(x, y), s);
  for (Index j = 0; j < 6; ++j)
    if (!s.contains(j)) EXPECT_EQ(fit.weights(j), 0.0) << j;
  Matrix sub(40, 2);
  sub << x.col(1), x.col(4);
  const Vector ref = oracle::normal_equations(sub, y);
  EXPECT_NEAR(fit.weights(1), ref(0), 1e-10);
  EXPECT_NEAR(fit.weights(4), ref(1), 1e-10);
}

TEST(OlsFit, EmptySupportIsZero) {
  const auto fit = ols_fit(Dataset(Matrix::Identity(3, 3), vec({1, 2, 3})), Support({}, 3));
  EXPECT_EQ(fit.weights, WeightVector::Zero(3));
  EXPECT_DOUBLE_EQ(fit.train_loss, 14.0);
}

TEST(OlsFit, UnderdeterminedGivesMinimumNormWithFlag) {
  std::mt19937_64 rng(17);
  const Matrix x = oracle::random_matrix(4, 9, rng);
  const Vector y = oracle::random_vector(4, rng);
  const auto fit = ols_fit(Dataset(x, y));
  EXPECT_TRUE(fit.diagnostics.rank_deficient);
  EXPECT_EQ(fit.diagnostics.rank, 4);
  // Minimum norm solution is X^T (X X^T)^{-1} y.
  const Vector ref = x.transpose() * (x * x.transpose()).fullPivLu().solve(y);
  EXPECT_LE((fit.weights - ref).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(OlsFit, DuplicatedColumnIsRankDeficient) {
  std::mt19937_64 rng(19);
  Matrix x = oracle::random_matrix(30, 3, rng);
  x.col(2) = x.col(0);
  const auto fit = ols_fit(Dataset(x, oracle::random_vector(30, rng)));
  EXPECT_TRUE(fit.diagnostics.rank_deficient);
  EXPECT_NEAR(fit.weights(0), fit.weights(2), 1e-10);  // min-norm splits evenly
}

TEST(OlsFit, NoPerturbationBeatsTheSolution) {
  std::mt19937_64 rng(23);
  const Matrix x = oracle::random_matrix(60, 7, rng);
  const Dataset data(x, oracle::random_vector(60, rng));
  const auto fit = ols_fit(data);
  std::normal_distribution<double> n(0.0, 1e-3);
  for (int t = 0; t < 100; ++t) {
    WeightVector w = fit.weights;
    for (Index j = 0; j < w.size(); ++j) w(j) += n(rng);
    EXPECT_LE(fit.train_loss, least_squares_loss(w, data));
  }
}

TEST(OlsFit, LossInvariantUnderRowPermutation) {
  std::mt19937_64 rng(29);
  const Dataset data(oracle::random_matrix(25, 4, rng), oracle::random_vector(25, rng));
  std::vector<Index> perm(25);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  const Dataset shuffled = data.rows(perm);
  const double a = least_squares_loss(ols_fit(data).weights, data);
  const double b = least_squares_loss(ols_fit(shuffled).weights, shuffled);
  EXPECT_NEAR(a, b, 1e-10 * a);
}

TEST(GenerateResponses, NoiselessIsExact) {
  std::mt19937_64 rng(31);
  const Matrix x = oracle::random_matrix(12, 3, rng);
  const Vector w = vec({1, 0, -2});
  EXPECT_EQ(generate_responses(w, x, 0.0, 7), x * w);
}

TEST(GenerateResponses, StandardNoiseMoments) {
  const Index m = 10000;
  const Vector y = generate_responses(WeightVector::Zero(1), Matrix::Ones(m, 1), 1.0, 2024);
  const double mean = y.mean();
  const double var = (y.array() - mean).square().sum() / (m - 1);
  EXPECT_LE(std::abs(mean), 4.0 / std::sqrt(static_cast<double>(m)));
  EXPECT_NEAR(var, 1.0, 0.1);
}

TEST(GenerateResponses, DeterministicPerSeed) {
  std::mt19937_64 rng(37);
  const Matrix x = oracle::random_matrix(50, 4, rng);
  const Vector w = oracle::random_vector(4, rng);
  const Vector a = generate_responses(w, x, 0.7, 99), b = generate_responses(w, x, 0.7, 99);
  EXPECT_EQ(0, std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())));
  EXPECT_NE(a, generate_responses(w, x, 0.7, 100));
}

TEST(GenerateResponses, NegativeSigmaRejected) {
  EXPECT_THROW(generate_responses(vec({1}), mat({{1}}), -0.1, 0), std::invalid_argument);
}
