#include "evcs/training.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "evcs/error.hpp"
#include "evcs/llf.hpp"

namespace evcs {

Eigen::VectorXd FeatureMap::raw(const StationState& state) const {
  const AggState s = cap_merge(aggregate(state, max_laxity), lmax);
  Eigen::VectorXd f(dim());
  f[0] = s.price;
  f.tail(lmax + 1) = s.counts.cast<double>();
  return f;
}

Eigen::VectorXd FeatureMap::operator()(const StationState& state) const {
  Eigen::VectorXd f = raw(state);
  if (mean.size() == 0) return f;
  return ((f - mean).array() / scale.array()).matrix();
}

void FeatureMap::fit(std::span<const EpisodeConfig> days) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim());
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(dim());
  double n = 0.0;
  auto observe = [&](const StationState& s) {
    const Eigen::VectorXd f = raw(s);
    sum += f;
    sq += f.cwiseProduct(f);
    n += 1.0;
  };
  const auto urgent_only = llf_controller([](const StationState& s) { return s.urgent_count(); });
  const auto everything = llf_controller([](const StationState& s) { return s.chargeable_count(); });
  for (const auto& day : days) {
    for (const auto* controller : {&urgent_only, &everything}) {
      const Rollout r = run_episode(day, *controller);
      for (const auto& step : r.steps) observe(step.state);
    }
  }
  if (n == 0.0) {
    mean.resize(0);
    scale.resize(0);
    return;
  }
  mean = sum / n;
  const Eigen::VectorXd var = (sq / n - mean.cwiseProduct(mean)).cwiseMax(0.0);
  scale = var.cwiseSqrt();
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    if (!(scale[i] > 1e-12)) scale[i] = 1.0;
  }
}

StateMapper FeatureMap::mapper() const {
  return [map = *this](const StationState& s) { return map(s); };
}

PolicyParamsd destandardize(const PolicyParamsd& params, const FeatureMap& features) {
  if (features.mean.size() == 0) return params;
  PolicyParamsd out = params;
  out.weights = params.weights.cwiseQuotient(features.scale);
  out.bias = params.bias - out.weights.dot(features.mean);
  return out;
}

double TrainConfig::sigma_at(int iteration) const {
  return std::max(sigma_min, sigma * std::pow(sigma_decay, iteration));
}

std::mt19937_64 trajectory_rng(std::uint64_t seed, int iteration, int day, int rollout) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(iteration), static_cast<std::uint32_t>(day),
                    static_cast<std::uint32_t>(rollout)};
  return std::mt19937_64(seq);
}

Trajectory policy_rollout(const EpisodeConfig& config, const PolicyParamsd& params, const StateMapper& mapper,
                          std::mt19937_64* rng) {
  Environment env(config);
  Trajectory traj;
  traj.steps.reserve(static_cast<std::size_t>(config.horizon));
  while (!env.done()) {
    const StationState& s = env.state();
    TrajectoryStep rec;
    rec.features = mapper(s);
    rec.raw_action = rng ? sample_action(params, rec.features, *rng) : policy_mean(params, rec.features);
    rec.chargeable = s.chargeable_count();
    rec.urgent = s.urgent_count();
    rec.applied_action = project_action(rec.raw_action, rec.chargeable, rec.urgent);
    rec.reward = env.step(llf_allocate(rec.applied_action, s.evs)).reward;
    traj.steps.push_back(std::move(rec));
  }
  return traj;
}

TrainResult train(std::span<const EpisodeConfig> days, const PolicyParamsd& initial, const TrainConfig& config,
                  const StateMapper& mapper) {
  if (days.empty()) throw InvalidArgument("training needs at least one day");
  if (config.batch < 0) throw InvalidArgument("batch must be non-negative");
  if (!(config.step_size >= 0.0)) throw InvalidArgument("step size must be non-negative");

  if (config.rollouts < 1) throw InvalidArgument("rollouts must be at least 1");

  const int n_days = static_cast<int>(days.size());
  const int batch = config.batch == 0 ? n_days : std::min(config.batch, n_days);
  const auto group = static_cast<std::size_t>(config.rollouts);

  TrainResult result;
  result.params = initial;
  int calm = 0;
  std::vector<Trajectory> trajectories(static_cast<std::size_t>(batch) * group);
  for (int it = 0; it < config.iterations; ++it) {
    result.params.sigma = config.sigma_at(it);
    double reward_sum = 0.0;
    for (int b = 0; b < batch; ++b) {
      const int day = (it * batch + b) % n_days;
      const EpisodeConfig& cfg = days[static_cast<std::size_t>(day)];
      for (int k = 0; k < config.rollouts; ++k) {
        auto rng = trajectory_rng(config.seed, it, day, k);
        Trajectory& traj = trajectories[static_cast<std::size_t>(b) * group + static_cast<std::size_t>(k)];
        traj = policy_rollout(cfg, result.params, mapper, &rng);
        reward_sum += traj.total_reward(cfg.discount);
      }
    }
    const Eigen::VectorXd before = result.params.packed();
    Eigen::VectorXd grad;
    if (group == 1) {
      grad = estimate_gradient(trajectories, result.params, config.discount, config.normalization);
    } else {
      grad = Eigen::VectorXd::Zero(before.size());
      for (int b = 0; b < batch; ++b) {
        const std::span<const Trajectory> same_day(trajectories.data() + static_cast<std::size_t>(b) * group, group);
        grad += estimate_gradient(same_day, result.params, config.discount, config.normalization);
      }
      grad /= batch;
    }
    result.params = pg_update(result.params, grad, config.step_size);
    const Eigen::VectorXd after = result.params.packed();

    result.curve.push_back(reward_sum / static_cast<double>(trajectories.size()));
    result.trace.push_back(after);
    result.sigmas.push_back(result.params.sigma);
    result.iterations = it + 1;

    if (!after.allFinite() || after.norm() > config.divergence_bound) {
      std::ostringstream msg;
      msg << "policy diverged at iteration " << it << " (parameter norm " << after.norm() << ")";
      throw NumericalError(msg.str());
    }
    const double change = (after - before).norm() / std::max(before.norm(), 1e-12);
    calm = change < config.convergence_tol ? calm + 1 : 0;
    if (config.step_size > 0.0 && calm >= config.convergence_patience) {
      result.converged = true;
      break;
    }
  }
  return result;
}

double evaluate_policy(const EpisodeConfig& config, const PolicyParamsd& params, const StateMapper& mapper,
                       std::vector<int>* actions) {
  const Trajectory traj = policy_rollout(config, params, mapper, nullptr);
  if (actions) {
    actions->clear();
    for (const auto& s : traj.steps) actions->push_back(s.applied_action);
  }
  return traj.total_reward(config.discount);
}

}  // namespace evcs
