#include "evcs/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "evcs/error.hpp"
#include "evcs/llf.hpp"
#include "evcs/training.hpp"

namespace evcs {

double trailing_median(std::span<const double> prices, int t, int window) {
  if (prices.empty()) throw InvalidArgument("empty price series");
  const int last = std::clamp(t, 0, static_cast<int>(prices.size()) - 1);
  const int first = std::max(0, last - std::max(window, 1) + 1);
  std::vector<double> w(prices.begin() + first, prices.begin() + last + 1);
  const std::size_t mid = w.size() / 2;
  std::nth_element(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(mid), w.end());
  if (w.size() % 2 == 1) return w[mid];
  const double upper = w[mid];
  const double lower = *std::max_element(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

QeFeatures qe_features(const AggState& state, int action, const QeContext& context, const QeFeatureConfig& config) {
  QeFeatures f;
  f[0] = (state.price > context.price_threshold && action > 0) ? 1.0 : 0.0;
  f[1] = action < context.urgent ? 1.0 : 0.0;
  f[2] = (context.chargeable > 0 && action == context.chargeable) ? 1.0 : 0.0;
  f[3] = state.total() > config.congestion_fraction * config.capacity ? 1.0 : 0.0;
  return f;
}

double qe_value(const Eigen::Ref<const Eigen::VectorXd>& theta, const Eigen::Ref<const Eigen::VectorXd>& features) {
  if (theta.size() != features.size()) throw InvalidArgument("theta and features differ in length");
  return theta.dot(features);
}

int qe_greedy_action(const QeFeatures& theta, const AggState& state, const QeContext& context, ActionBounds bounds,
                     const QeFeatureConfig& config) {
  if (bounds.lower > bounds.upper) throw InvalidArgument("empty action range");
  int best = bounds.lower;
  double best_value = qe_value(theta, qe_features(state, best, context, config));
  for (int a = bounds.lower + 1; a <= bounds.upper; ++a) {
    const double v = qe_value(theta, qe_features(state, a, context, config));
    if (v > best_value) {
      best = a;
      best_value = v;
    }
  }
  return best;
}

double td_error(const Eigen::Ref<const Eigen::VectorXd>& theta, const Eigen::Ref<const Eigen::VectorXd>& features,
                double reward, double discount, const Eigen::Ref<const Eigen::VectorXd>& next_features, bool terminal) {
  const double next = terminal ? 0.0 : qe_value(theta, next_features);
  return reward + discount * next - qe_value(theta, features);
}

void semi_gradient_step(Eigen::Ref<Eigen::VectorXd> theta, const Eigen::Ref<const Eigen::VectorXd>& features,
                        double td_error, double step_size) {
  theta += step_size * td_error * features;
}

double QeTrainConfig::epsilon_at(int iteration) const {
  const double half = std::max(1.0, 0.5 * iterations);
  const double frac = iteration / half;
  if (frac >= 1.0) return epsilon_end;
  return epsilon_start + (epsilon_end - epsilon_start) * frac;
}

namespace {

struct Decision {
  AggState agg;
  QeContext context;
  ActionBounds bounds;
};

Decision decide_context(const EpisodeConfig& config, const StationState& s, int max_laxity, const QeFeatureConfig& f) {
  Decision d;
  d.agg = aggregate(s, max_laxity);
  d.context.chargeable = s.chargeable_count();
  d.context.urgent = s.urgent_count();
  d.context.price_threshold = trailing_median(config.prices, s.t, f.price_window);
  d.bounds = {d.context.urgent, d.context.chargeable};
  return d;
}

}  // namespace

QeTrainResult qe_train(std::span<const EpisodeConfig> days, int max_laxity, const QeTrainConfig& config,
                       bool record_visits) {
  if (days.empty()) throw InvalidArgument("training needs at least one day");

  QeTrainResult result;
  result.reward_scale = config.reward_scale;
  if (result.reward_scale == 0.0) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& d : days) {
      for (double p : d.prices) sum += std::abs(p);
      n += d.prices.size();
    }
    result.reward_scale = (n > 0 && sum > 0.0) ? static_cast<double>(n) / sum : 1.0;
  }

  QeFeatures theta = QeFeatures::Zero();
  for (int it = 0; it < config.iterations; ++it) {
    const double eps = config.epsilon_at(it);
    double reward_sum = 0.0;
    for (std::size_t day = 0; day < days.size(); ++day) {
      const EpisodeConfig& cfg = days[day];
      auto rng = trajectory_rng(config.seed, it, static_cast<int>(day));
      std::uniform_real_distribution<double> coin(0.0, 1.0);
      Environment env(cfg);
      Decision current = decide_context(cfg, env.state(), max_laxity, config.features);
      while (!env.done()) {
        int action;
        if (coin(rng) < eps) {
          std::uniform_int_distribution<int> pick(current.bounds.lower, current.bounds.upper);
          action = pick(rng);
        } else {
          action = qe_greedy_action(theta, current.agg, current.context, current.bounds, config.features);
        }
        const QeFeatures f = qe_features(current.agg, action, current.context, config.features);
        const StepResult r = env.step(llf_allocate(action, env.state().evs));
        const double scaled = r.reward * result.reward_scale;

        QeFeatures next_f = QeFeatures::Zero();
        const bool terminal = env.done();
        if (!terminal) {
          current = decide_context(cfg, env.state(), max_laxity, config.features);
          const int greedy = qe_greedy_action(theta, current.agg, current.context, current.bounds, config.features);
          next_f = qe_features(current.agg, greedy, current.context, config.features);
        }
        const double delta = td_error(theta, f, scaled, config.discount, next_f, terminal);
        semi_gradient_step(theta, f, delta, config.step_size);
        if (record_visits) result.visits.push_back({f, scaled});
      }
      reward_sum += env.discounted_return();
    }
    if (!theta.allFinite() || theta.norm() > config.divergence_bound) {
      std::ostringstream msg;
      msg << "Q-function weights diverged at iteration " << it;
      throw NumericalError(msg.str());
    }
    result.curve.push_back(reward_sum / static_cast<double>(days.size()));
    result.trace.push_back(theta);
    result.iterations = it + 1;
  }
  result.theta = theta;
  return result;
}

double evaluate_qe(const EpisodeConfig& config, const QeFeatures& theta, int max_laxity,
                   const QeFeatureConfig& features, std::vector<int>* actions) {
  Environment env(config);
  if (actions) actions->clear();
  while (!env.done()) {
    const Decision d = decide_context(config, env.state(), max_laxity, features);
    const int a = qe_greedy_action(theta, d.agg, d.context, d.bounds, features);
    if (actions) actions->push_back(a);
    env.step(llf_allocate(a, env.state().evs));
  }
  return env.discounted_return();
}

}  // namespace evcs
