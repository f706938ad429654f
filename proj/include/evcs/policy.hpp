#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "evcs/error.hpp"

namespace evcs {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Linear Gaussian policy a ~ N(weights . s + bias, sigma^2).
template <typename Scalar>
struct PolicyParams {
  Vector<Scalar> weights;
  Scalar bias = Scalar(0);
  Scalar sigma = Scalar(1);

  Eigen::Index dim() const { return weights.size(); }

  /// [weights; bias], the vector the gradient lives in.
  Vector<Scalar> packed() const {
    Vector<Scalar> mu(weights.size() + 1);
    mu << weights, bias;
    return mu;
  }

  static PolicyParams zeros(Eigen::Index dim, Scalar sigma) {
    return PolicyParams{Vector<Scalar>::Zero(dim), Scalar(0), sigma};
  }
};

using PolicyParamsd = PolicyParams<double>;

namespace detail {
template <typename Scalar, typename Derived>
void check_dim(const PolicyParams<Scalar>& params, const Eigen::MatrixBase<Derived>& features) {
  if (features.size() != params.weights.size()) {
    throw InvalidArgument("feature length " + std::to_string(features.size()) + " does not match policy dimension " +
                          std::to_string(params.weights.size()));
  }
}
}  // namespace detail

template <typename Scalar, typename Derived>
Scalar policy_mean(const PolicyParams<Scalar>& params, const Eigen::MatrixBase<Derived>& features) {
  detail::check_dim(params, features);
  return params.weights.dot(features) + params.bias;
}

/// mean + sigma * z with z drawn from `rng`.
template <typename Scalar, typename Derived, typename Rng>
Scalar sample_action(const PolicyParams<Scalar>& params, const Eigen::MatrixBase<Derived>& features, Rng& rng) {
  std::normal_distribution<Scalar> standard(Scalar(0), Scalar(1));
  return policy_mean(params, features) + params.sigma * standard(rng);
}

template <typename Scalar, typename Derived>
Scalar log_prob(const PolicyParams<Scalar>& params, const Eigen::MatrixBase<Derived>& features, Scalar action) {
  using std::log;
  const Scalar z = (action - policy_mean(params, features)) / params.sigma;
  return -Scalar(0.5) * z * z - log(params.sigma) - Scalar(0.5) * log(Scalar(2) * std::numbers::pi_v<Scalar>);
}

/// Score function of the Gaussian with respect to [weights; bias].
template <typename Scalar, typename Derived>
Vector<Scalar> log_prob_grad(const PolicyParams<Scalar>& params, const Eigen::MatrixBase<Derived>& features,
                             Scalar action) {
  if (!(params.sigma > Scalar(0))) throw InvalidArgument("sigma must be positive");
  const Scalar scale = (action - policy_mean(params, features)) / (params.sigma * params.sigma);
  Vector<Scalar> g(params.dim() + 1);
  g.head(params.dim()) = scale * features;
  g[params.dim()] = scale;
  return g;
}

/// Rounds to the nearest integer, then clamps into [urgent, chargeable].
int project_action(double raw, int chargeable, int urgent);

/// Discounted reward-to-go for every step.
template <typename Scalar>
Vector<Scalar> estimate_returns(std::span<const Scalar> rewards, Scalar discount) {
  if (rewards.empty()) throw InvalidArgument("cannot estimate returns of an empty trajectory");
  const auto n = static_cast<Eigen::Index>(rewards.size());
  Vector<Scalar> q(n);
  Scalar acc = Scalar(0);
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    acc = rewards[static_cast<std::size_t>(t)] + discount * acc;
    q[t] = acc;
  }
  return q;
}

/// Subtracts the mean and divides by the population standard deviation.
/// Inputs with (numerically) zero spread map to zeros.
template <typename Scalar>
Vector<Scalar> normalize_returns(const Vector<Scalar>& returns) {
  using std::sqrt;
  if (returns.size() == 0) return returns;
  const Scalar mean = returns.mean();
  const Vector<Scalar> centered = returns.array() - mean;
  const Scalar sd = sqrt(centered.squaredNorm() / Scalar(returns.size()));
  const Scalar scale = returns.cwiseAbs().maxCoeff();
  if (!(sd > Scalar(1e-12) * (scale > Scalar(1) ? scale : Scalar(1)))) return Vector<Scalar>::Zero(returns.size());
  return centered / sd;
}

struct TrajectoryStep {
  Eigen::VectorXd features;  // standardized policy input s'_t
  double raw_action = 0.0;   // sampled continuous action
  int applied_action = 0;    // after projection
  double reward = 0.0;
  int chargeable = 0;
  int urgent = 0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;

  double total_reward(double discount = 1.0) const;
  std::vector<double> rewards() const;
};

/// PerEpisode: statistics of one trajectory's returns. PerBatch: pooled over
/// every step of the batch. PerTimeStep: over the batch's returns at the same
/// slot index.
enum class ReturnNormalization { PerEpisode, PerBatch, PerTimeStep, None };

std::string_view to_string(ReturnNormalization n);

/// Batch-averaged REINFORCE estimate: per trajectory, sum over steps of the
/// normalized reward-to-go times the score at the raw (pre-projection) action.
Eigen::VectorXd estimate_gradient(std::span<const Trajectory> batch, const PolicyParamsd& params, double discount,
                                  ReturnNormalization normalization = ReturnNormalization::PerBatch);

/// params + step_size * gradient on [weights; bias]; sigma is left alone.
template <typename Scalar>
PolicyParams<Scalar> pg_update(const PolicyParams<Scalar>& params, const Vector<Scalar>& gradient, Scalar step_size) {
  if (!(step_size >= Scalar(0))) throw InvalidArgument("step size must be non-negative");
  if (gradient.size() != params.dim() + 1) throw InvalidArgument("gradient has wrong length");
  if (!gradient.allFinite()) throw NumericalError("non-finite policy gradient");
  PolicyParams<Scalar> next = params;
  next.weights += step_size * gradient.head(params.dim());
  next.bias += step_size * gradient[params.dim()];
  return next;
}

}  // namespace evcs
