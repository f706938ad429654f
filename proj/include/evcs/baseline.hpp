#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "evcs/agg.hpp"
#include "evcs/env.hpp"

namespace evcs {

// Linear approximate-Q comparison policy over four binary features:
//   f1 cost        price above the trailing-median threshold and action > 0
//   f2 deadline    action below the number of zero-laxity EVs
//   f3 saturation  action equals the number of chargeable EVs
//   f4 congestion  parked EVs above congestion_fraction * capacity

using QeFeatures = Eigen::Vector4d;

struct QeFeatureConfig {
  int price_window = 24;  // slots in the trailing median
  int capacity = 40;
  double congestion_fraction = 0.5;
};

struct QeContext {
  int chargeable = 0;
  int urgent = 0;
  double price_threshold = 0.0;
};

struct ActionBounds {
  int lower = 0;
  int upper = 0;
};

/// Median of the last `window` prices up to and including t.
double trailing_median(std::span<const double> prices, int t, int window);

QeFeatures qe_features(const AggState& state, int action, const QeContext& context, const QeFeatureConfig& config);

double qe_value(const Eigen::Ref<const Eigen::VectorXd>& theta, const Eigen::Ref<const Eigen::VectorXd>& features);

/// Argmax of the approximate Q over integer actions in `bounds`; ties go to the smaller action.
int qe_greedy_action(const QeFeatures& theta, const AggState& state, const QeContext& context, ActionBounds bounds,
                     const QeFeatureConfig& config);

/// r + discount * Q(s', a') - Q(s, a).
double td_error(const Eigen::Ref<const Eigen::VectorXd>& theta, const Eigen::Ref<const Eigen::VectorXd>& features,
                double reward, double discount, const Eigen::Ref<const Eigen::VectorXd>& next_features, bool terminal);

/// theta += step_size * td_error * features.
void semi_gradient_step(Eigen::Ref<Eigen::VectorXd> theta, const Eigen::Ref<const Eigen::VectorXd>& features,
                        double td_error, double step_size);

struct QeTrainConfig {
  double step_size = 0.01;
  double discount = 1.0;
  int iterations = 500;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  /// Rewards are multiplied by this before the update; 0 picks 1/mean|price|.
  double reward_scale = 0.0;
  std::uint64_t seed = 1;
  double divergence_bound = 1e8;
  QeFeatureConfig features;

  double epsilon_at(int iteration) const;
};

struct QeVisit {
  QeFeatures features;
  double reward = 0.0;  // scaled
};

struct QeTrainResult {
  QeFeatures theta = QeFeatures::Zero();
  std::vector<double> curve;  // mean episode reward per iteration
  std::vector<QeFeatures> trace;
  double reward_scale = 1.0;
  int iterations = 0;
  std::vector<QeVisit> visits;  // filled only when record_visits is set
};

/// Episodic semi-gradient Q-learning with epsilon-greedy exploration; every
/// iteration plays each training day once.
QeTrainResult qe_train(std::span<const EpisodeConfig> days, int max_laxity, const QeTrainConfig& config,
                       bool record_visits = false);

/// Greedy rollout of the learned Q; returns the discounted reward.
double evaluate_qe(const EpisodeConfig& config, const QeFeatures& theta, int max_laxity,
                   const QeFeatureConfig& features, std::vector<int>* actions = nullptr);

}  // namespace evcs
