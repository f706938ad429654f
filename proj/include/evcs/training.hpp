#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "evcs/agg.hpp"
#include "evcs/env.hpp"
#include "evcs/policy.hpp"

namespace evcs {

using StateMapper = std::function<Eigen::VectorXd(const StationState&)>;

/// Maps a station to the standardized policy input [price, n^(0), ..., n^(lmax)].
/// Counts are aggregated over [0, max_laxity] and then capped at lmax.
struct FeatureMap {
  int max_laxity = 12;
  int lmax = 12;
  Eigen::VectorXd mean;   // empty means identity scaling
  Eigen::VectorXd scale;

  Eigen::Index dim() const { return lmax + 2; }
  Eigen::VectorXd raw(const StationState& state) const;
  Eigen::VectorXd operator()(const StationState& state) const;

  /// Fits mean/scale on states visited by two reference controllers (charge
  /// only the urgent EVs, charge everything) over the given days.
  void fit(std::span<const EpisodeConfig> days);
  StateMapper mapper() const;
};

/// Same policy expressed on unscaled features.
PolicyParamsd destandardize(const PolicyParamsd& params, const FeatureMap& features);

struct TrainConfig {
  double step_size = 1e-3;
  double discount = 1.0;
  int iterations = 500;
  int batch = 0;     // days per update, 0 = all
  int rollouts = 1;  // sampled episodes per day; returns are normalized within each day's group
  double sigma = 1.0;
  double sigma_decay = 1.0;  // multiplicative per iteration
  double sigma_min = 0.05;
  std::uint64_t seed = 1;
  ReturnNormalization normalization = ReturnNormalization::PerTimeStep;
  double convergence_tol = 1e-4;
  int convergence_patience = 10;
  double divergence_bound = 1e8;

  double sigma_at(int iteration) const;
};

struct TrainResult {
  PolicyParamsd params;
  std::vector<double> curve;            // mean sampled episode reward per iteration
  std::vector<Eigen::VectorXd> trace;   // [weights; bias] after each iteration
  std::vector<double> sigmas;
  int iterations = 0;
  bool converged = false;
};

/// One episode with LLF disaggregation. With `rng` actions are sampled, otherwise
/// the policy mean is used.
Trajectory policy_rollout(const EpisodeConfig& config, const PolicyParamsd& params, const StateMapper& mapper,
                          std::mt19937_64* rng);

TrainResult train(std::span<const EpisodeConfig> days, const PolicyParamsd& initial, const TrainConfig& config,
                  const StateMapper& mapper);

/// Deterministic (mean-action) evaluation; returns the discounted episode reward.
double evaluate_policy(const EpisodeConfig& config, const PolicyParamsd& params, const StateMapper& mapper,
                       std::vector<int>* actions = nullptr);

/// Per-(seed, iteration, day, rollout) stream so batches can be rolled out in any order.
std::mt19937_64 trajectory_rng(std::uint64_t seed, int iteration, int day, int rollout = 0);

}  // namespace evcs
