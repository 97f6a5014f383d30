#pragma once

// Core types for sparse linear models y = X·beta + noise (no intercept),
// the forward model, the least-squares loss and the OLS solver.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "boats/random.hpp"

namespace boats {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Model coefficients, one per input feature.
using WeightVector = Eigen::VectorXd;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void require_dims(Index got, Index want, std::string_view what_got,
                         std::string_view what_want) {
  if (got != want)
    throw DimensionError(std::string(what_got) + " (" + std::to_string(got) + ") does not match " +
                         std::string(what_want) + " (" + std::to_string(want) + ")");
}

}  // namespace detail

/// m input/output pairs. Rows of `inputs` are samples.
class Dataset {
 public:
  Dataset() = default;

  Dataset(Matrix inputs, Vector outputs) : inputs_(std::move(inputs)), outputs_(std::move(outputs)) {
    detail::require_dims(outputs_.size(), inputs_.rows(), "output length", "input row count");
    if (inputs_.rows() < 1) throw std::invalid_argument("dataset needs at least one sample");
    if (!inputs_.allFinite() || !outputs_.allFinite())
      throw std::invalid_argument("dataset contains non-finite values");
  }

  const Matrix& inputs() const noexcept { return inputs_; }
  const Vector& outputs() const noexcept { return outputs_; }
  Index samples() const noexcept { return inputs_.rows(); }
  Index features() const noexcept { return inputs_.cols(); }

  /// Subset of rows, in the given order.
  Dataset rows(std::span<const Index> idx) const {
    Matrix x(static_cast<Index>(idx.size()), features());
    Vector y(static_cast<Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) {
      x.row(static_cast<Index>(r)) = inputs_.row(idx[r]);
      y(static_cast<Index>(r)) = outputs_(idx[r]);
    }
    return Dataset(std::move(x), std::move(y));
  }

  Dataset with_outputs(Vector y) const { return Dataset(inputs_, std::move(y)); }

 private:
  Matrix inputs_;
  Vector outputs_;
};

/// Sorted set of nonzero coordinates in [0, d).
class Support {
 public:
  Support() = default;

  Support(std::vector<Index> indices, Index dimension)
      : indices_(std::move(indices)), dimension_(dimension) {
    for (std::size_t i = 0; i < indices_.size(); ++i) {
      if (indices_[i] < 0 || indices_[i] >= dimension_)
        throw std::out_of_range("support index " + std::to_string(indices_[i]) +
                                " outside [0, " + std::to_string(dimension_) + ")");
      if (i > 0 && indices_[i] <= indices_[i - 1])
        throw std::invalid_argument("support indices must be strictly increasing");
    }
  }

  static Support full(Index dimension) {
    std::vector<Index> idx(static_cast<std::size_t>(dimension));
    for (Index j = 0; j < dimension; ++j) idx[static_cast<std::size_t>(j)] = j;
    return Support(std::move(idx), dimension);
  }

  /// Coordinates of `w` that are not exactly zero.
  static Support nonzero(const WeightVector& w) {
    std::vector<Index> idx;
    for (Index j = 0; j < w.size(); ++j)
      if (w(j) != 0.0) idx.push_back(j);
    return Support(std::move(idx), w.size());
  }

  const std::vector<Index>& indices() const noexcept { return indices_; }
  Index size() const noexcept { return static_cast<Index>(indices_.size()); }
  Index dimension() const noexcept { return dimension_; }
  bool empty() const noexcept { return indices_.empty(); }

  bool contains(Index j) const {
    return std::binary_search(indices_.begin(), indices_.end(), j);
  }

  bool operator==(const Support&) const = default;

 private:
  std::vector<Index> indices_;
  Index dimension_ = 0;
};

/// L0 norm.
inline Index count_nonzero(const WeightVector& w) {
  return static_cast<Index>((w.array() != 0.0).count());
}

enum class Method { OLS, Ridge, Lasso, ElasticNet, BoATS };

constexpr std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::OLS: return "ols";
    case Method::Ridge: return "ridge";
    case Method::Lasso: return "lasso";
    case Method::ElasticNet: return "elastic_net";
    case Method::BoATS: return "boats";
  }
  return "unknown";
}

inline std::optional<Method> parse_method(std::string_view s) {
  for (Method m : {Method::OLS, Method::Ridge, Method::Lasso, Method::ElasticNet, Method::BoATS})
    if (s == to_string(m)) return m;
  if (s == "enet" || s == "en") return Method::ElasticNet;
  if (s == "ats") return Method::BoATS;
  return std::nullopt;
}

struct FitDiagnostics {
  bool rank_deficient = false;
  Index rank = 0;
  bool converged = true;
  int iterations = 0;
  std::vector<double> objective_trace;  // filled only when requested
};

struct FitResult {
  WeightVector weights;
  double meta_parameter = 0.0;
  Method method = Method::OLS;
  double train_loss = 0.0;
  FitDiagnostics diagnostics;
};

/// X·beta.
inline Vector predict(const WeightVector& weights, const Matrix& inputs) {
  detail::require_dims(inputs.cols(), weights.size(), "input column count", "weight length");
  return inputs * weights;
}

/// Residual sum of squares, sum_i (y_i - beta·x_i)^2.
inline double least_squares_loss(const WeightVector& weights, const Dataset& data) {
  return (data.outputs() - predict(weights, data.inputs())).squaredNorm();
}

/// Minimum-norm least-squares solver for a fixed design. The factorization
/// is computed once, so repeated solves against different responses (e.g.
/// permuted outputs) only cost a pair of triangular/orthogonal applications.
class LeastSquaresSolver {
 public:
  explicit LeastSquaresSolver(const Matrix& design) : rows_(design.rows()), cols_(design.cols()) {
    if (cols_ > 0) cod_.compute(design);
  }

  Vector solve(const Vector& y) const {
    detail::require_dims(y.size(), rows_, "response length", "design row count");
    if (cols_ == 0) return Vector();
    return cod_.solve(y);
  }

  Index rank() const { return cols_ == 0 ? 0 : cod_.rank(); }
  bool rank_deficient() const { return rank() < cols_; }

 private:
  Index rows_;
  Index cols_;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod_;
};

/// Columns of X listed in `support`.
inline Matrix select_columns(const Matrix& x, const Support& support) {
  Matrix out(x.rows(), support.size());
  for (Index c = 0; c < support.size(); ++c)
    out.col(c) = x.col(support.indices()[static_cast<std::size_t>(c)]);
  return out;
}

/// Places `values` at the support coordinates of a zero vector of length d.
inline WeightVector embed(const Vector& values, const Support& support) {
  WeightVector w = WeightVector::Zero(support.dimension());
  for (Index c = 0; c < support.size(); ++c)
    w(support.indices()[static_cast<std::size_t>(c)]) = values(c);
  return w;
}

/// Ordinary least squares, optionally restricted to a support. Off-support
/// weights are exactly zero. Rank-deficient and underdetermined systems get
/// the minimum-norm solution with diagnostics.rank_deficient set.
inline FitResult ols_fit(const Dataset& data, const std::optional<Support>& support = std::nullopt) {
  FitResult fit;
  fit.method = Method::OLS;
  const Index d = data.features();
  if (support) {
    detail::require_dims(support->dimension(), d, "support dimension", "feature count");
    if (support->empty()) {
      fit.weights = WeightVector::Zero(d);
    } else {
      LeastSquaresSolver solver(select_columns(data.inputs(), *support));
      fit.weights = embed(solver.solve(data.outputs()), *support);
      fit.diagnostics.rank = solver.rank();
      fit.diagnostics.rank_deficient = solver.rank_deficient();
    }
  } else {
    LeastSquaresSolver solver(data.inputs());
    fit.weights = solver.solve(data.outputs());
    fit.diagnostics.rank = solver.rank();
    fit.diagnostics.rank_deficient = solver.rank_deficient();
  }
  fit.train_loss = least_squares_loss(fit.weights, data);
  return fit;
}

/// y = X·beta + eps with eps ~ N(0, sigma^2) i.i.d.
inline Vector generate_responses(const WeightVector& weights, const Matrix& inputs, double noise_sigma,
                                 Seed seed) {
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw std::invalid_argument("noise_sigma must be a finite nonnegative number");
  Vector y = predict(weights, inputs);
  if (noise_sigma == 0.0) return y;
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma);
  for (Index i = 0; i < y.size(); ++i) y(i) += noise(rng);
  return y;
}

}  // namespace boats
