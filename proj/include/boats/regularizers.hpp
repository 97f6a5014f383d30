#pragma once

// Structured baselines: ridge, LASSO and elastic net.
//
// Scaling conventions:
//   ridge_fit          minimizes  RSS + lambda2 * ||b||_2^2            (closed form)
//   lasso / elastic    minimize   RSS / (2m) + lambda1 * ||b||_1 + (lambda2 / 2) * ||b||_2^2
//
// so elastic_net_fit({0, l}) equals ridge_fit(m * l). Solvers never
// standardize features.

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "boats/model_core.hpp"

namespace boats {

struct RegularizerSpec {
  double lambda1 = 0.0;  // L1 weight
  double lambda2 = 0.0;  // L2 weight

  /// The benchmark's 50/50 elastic net at scalar strength lambda.
  static RegularizerSpec even_split(double lambda) { return {lambda / 2.0, lambda / 2.0}; }
};

struct CoordinateDescentOptions {
  double tol = 1e-7;
  int max_iter = 10000;
  bool track_objective = false;
};

inline double soft_threshold(double z, double gamma) noexcept {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

/// (1/2m) RSS + lambda1 ||b||_1 + (lambda2/2) ||b||_2^2
inline double penalized_objective(const WeightVector& w, const Dataset& data, const RegularizerSpec& spec) {
  const double m = static_cast<double>(data.samples());
  return least_squares_loss(w, data) / (2.0 * m) + spec.lambda1 * w.lpNorm<1>() +
         0.5 * spec.lambda2 * w.squaredNorm();
}

/// Largest violation of the subgradient optimality conditions of
/// penalized_objective. Zero at an exact minimizer.
inline double kkt_violation(const WeightVector& w, const Dataset& data, const RegularizerSpec& spec) {
  const double m = static_cast<double>(data.samples());
  const Vector grad =
      data.inputs().transpose() * (data.outputs() - predict(w, data.inputs())) / m - spec.lambda2 * w;
  double worst = 0.0;
  for (Index j = 0; j < w.size(); ++j) {
    const double v = w(j) != 0.0 ? std::abs(grad(j) - spec.lambda1 * (w(j) > 0 ? 1.0 : -1.0))
                                 : std::max(0.0, std::abs(grad(j)) - spec.lambda1);
    worst = std::max(worst, v);
  }
  return worst;
}

namespace detail {

inline void check_spec(const RegularizerSpec& spec) {
  if (!(spec.lambda1 >= 0.0) || !(spec.lambda2 >= 0.0) || !std::isfinite(spec.lambda1) ||
      !std::isfinite(spec.lambda2))
    throw std::invalid_argument("regularization weights must be finite and nonnegative");
}

}  // namespace detail

/// Cyclic coordinate descent over a fixed dataset. Column norms are cached so
/// a path of fits over several penalties pays for them once.
class CoordinateDescentSolver {
 public:
  explicit CoordinateDescentSolver(const Dataset& data)
      : data_(&data), scale_(data.inputs().colwise().squaredNorm().transpose() / samples()) {
    max_corr_ = (data.inputs().transpose() * data.outputs()).cwiseAbs().maxCoeff() / samples();
  }

  /// Smallest lambda1 at which (with lambda2 = 0) the solution is all zero.
  double lambda1_max() const noexcept { return max_corr_; }

  FitResult fit(const RegularizerSpec& spec, const std::optional<WeightVector>& warm_start = std::nullopt,
                const CoordinateDescentOptions& opts = {}) const {
    detail::check_spec(spec);
    if (!(opts.tol > 0.0) || opts.max_iter < 1)
      throw std::invalid_argument("coordinate descent needs tol > 0 and max_iter >= 1");
    const Matrix& x = data_->inputs();
    const Index d = x.cols();
    const double m = samples();

    FitResult fit;
    fit.weights = warm_start ? *warm_start : WeightVector::Zero(d);
    detail::require_dims(fit.weights.size(), d, "warm start length", "feature count");
    Vector resid = data_->outputs() - x * fit.weights;

    const double kkt_tol = opts.tol + 1e-12 * max_corr_;
    auto objective = [&] {
      return resid.squaredNorm() / (2.0 * m) + spec.lambda1 * fit.weights.lpNorm<1>() +
             0.5 * spec.lambda2 * fit.weights.squaredNorm();
    };
    if (opts.track_objective) fit.diagnostics.objective_trace.push_back(objective());

    fit.diagnostics.converged = false;
    int iter = 0;
    while (iter < opts.max_iter) {
      ++iter;
      double max_change = 0.0;
      for (Index j = 0; j < d; ++j) {
        const double denom = scale_(j) + spec.lambda2;
        const double old = fit.weights(j);
        double next = 0.0;
        if (denom > 0.0) {
          const double z = x.col(j).dot(resid) / m + scale_(j) * old;
          next = soft_threshold(z, spec.lambda1) / denom;
        }
        if (next != old) {
          resid.noalias() -= (next - old) * x.col(j);
          fit.weights(j) = next;
          max_change = std::max(max_change, std::abs(next - old));
        }
      }
      if (opts.track_objective) fit.diagnostics.objective_trace.push_back(objective());
      if (max_change < opts.tol && kkt_violation(fit.weights, *data_, spec) <= kkt_tol) {
        fit.diagnostics.converged = true;
        break;
      }
    }
    fit.diagnostics.iterations = iter;
    fit.diagnostics.rank = count_nonzero(fit.weights);
    fit.train_loss = resid.squaredNorm();
    fit.method = spec.lambda2 == 0.0 ? Method::Lasso : Method::ElasticNet;
    fit.meta_parameter = spec.lambda1 + spec.lambda2;
    return fit;
  }

 private:
  double samples() const noexcept { return static_cast<double>(data_->samples()); }

  const Dataset* data_;
  Vector scale_;  // ||x_j||^2 / m
  double max_corr_ = 0.0;
};

/// LASSO by cyclic coordinate descent. Non-convergence within max_iter is
/// reported through diagnostics.converged, never silently.
inline FitResult lasso_fit(const Dataset& data, double lambda1, const CoordinateDescentOptions& opts = {}) {
  if (!(lambda1 > 0.0)) throw std::invalid_argument("lasso_fit needs lambda1 > 0");
  auto fit = CoordinateDescentSolver(data).fit({lambda1, 0.0}, std::nullopt, opts);
  fit.method = Method::Lasso;
  fit.meta_parameter = lambda1;
  return fit;
}

inline FitResult elastic_net_fit(const Dataset& data, const RegularizerSpec& spec,
                                 const CoordinateDescentOptions& opts = {}) {
  detail::check_spec(spec);
  if (!(spec.lambda1 > 0.0) && !(spec.lambda2 > 0.0))
    throw std::invalid_argument("elastic_net_fit needs lambda1 > 0 or lambda2 > 0");
  auto fit = CoordinateDescentSolver(data).fit(spec, std::nullopt, opts);
  fit.method = Method::ElasticNet;
  return fit;
}

/// Warm-started path. Fits are computed in descending order of the scalar
/// strength (each starting from the previous solution) and returned in the
/// order of `lambdas`. `to_spec` maps a scalar strength to penalty weights.
template <class ToSpec>
std::vector<FitResult> coordinate_descent_path(const Dataset& data, const std::vector<double>& lambdas,
                                               ToSpec&& to_spec, const CoordinateDescentOptions& opts = {}) {
  std::vector<std::size_t> order(lambdas.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lambdas[a] > lambdas[b]; });

  CoordinateDescentSolver solver(data);
  std::vector<FitResult> out(lambdas.size());
  std::optional<WeightVector> warm;
  for (std::size_t i : order) {
    out[i] = solver.fit(to_spec(lambdas[i]), warm, opts);
    out[i].meta_parameter = lambdas[i];
    warm = out[i].weights;
  }
  return out;
}

inline std::vector<FitResult> lasso_path(const Dataset& data, const std::vector<double>& lambdas,
                                         const CoordinateDescentOptions& opts = {}) {
  auto fits = coordinate_descent_path(data, lambdas, [](double l) { return RegularizerSpec{l, 0.0}; }, opts);
  for (auto& f : fits) f.method = Method::Lasso;
  return fits;
}

inline std::vector<FitResult> elastic_net_path(const Dataset& data, const std::vector<double>& lambdas,
                                               const CoordinateDescentOptions& opts = {}) {
  auto fits = coordinate_descent_path(data, lambdas, RegularizerSpec::even_split, opts);
  for (auto& f : fits) f.method = Method::ElasticNet;
  return fits;
}

/// Ridge regression, (X'X + lambda2 I)^{-1} X'y.
inline FitResult ridge_fit(const Dataset& data, double lambda2) {
  if (!(lambda2 > 0.0) || !std::isfinite(lambda2))
    throw std::invalid_argument("ridge_fit needs a finite lambda2 > 0");
  const Matrix& x = data.inputs();
  Matrix gram = x.transpose() * x;
  gram.diagonal().array() += lambda2;
  FitResult fit;
  fit.method = Method::Ridge;
  fit.meta_parameter = lambda2;
  fit.weights = gram.ldlt().solve(x.transpose() * data.outputs());
  fit.diagnostics.rank = x.cols();
  fit.train_loss = least_squares_loss(fit.weights, data);
  return fit;
}

/// Ridge solutions for many penalties from a single thin SVD of X.
class RidgePath {
 public:
  explicit RidgePath(const Dataset& data) : data_(&data) {
    Eigen::BDCSVD<Matrix> svd(data.inputs(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    singular_ = svd.singularValues();
    v_ = svd.matrixV();
    uty_ = svd.matrixU().transpose() * data.outputs();
  }

  FitResult fit(double lambda2) const {
    if (!(lambda2 > 0.0)) throw std::invalid_argument("ridge needs lambda2 > 0");
    const Vector shrink = singular_.array() / (singular_.array().square() + lambda2);
    FitResult fit;
    fit.method = Method::Ridge;
    fit.meta_parameter = lambda2;
    fit.weights = v_ * shrink.cwiseProduct(uty_);
    fit.diagnostics.rank = data_->features();
    fit.train_loss = least_squares_loss(fit.weights, *data_);
    return fit;
  }

 private:
  const Dataset* data_;
  Vector singular_;
  Matrix v_;
  Vector uty_;
};

}  // namespace boats
