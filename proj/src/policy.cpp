#include "evcs/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace evcs {

int project_action(double raw, int chargeable, int urgent) {
  if (urgent < 0 || urgent > chargeable) throw InvalidArgument("need 0 <= urgent <= chargeable");
  if (std::isnan(raw)) throw NumericalError("NaN action");
  const double rounded = std::nearbyint(std::clamp(raw, -1e9, 1e9));
  return std::clamp(static_cast<int>(rounded), urgent, chargeable);
}

std::string_view to_string(ReturnNormalization n) {
  switch (n) {
    case ReturnNormalization::PerEpisode: return "per-episode";
    case ReturnNormalization::PerBatch: return "per-batch";
    case ReturnNormalization::PerTimeStep: return "per-time-step";
    case ReturnNormalization::None: return "none";
  }
  return "unknown";
}

double Trajectory::total_reward(double discount) const {
  double acc = 0.0;
  double power = 1.0;
  for (const auto& s : steps) {
    acc += power * s.reward;
    power *= discount;
  }
  return acc;
}

std::vector<double> Trajectory::rewards() const {
  std::vector<double> r;
  r.reserve(steps.size());
  for (const auto& s : steps) r.push_back(s.reward);
  return r;
}

Eigen::VectorXd estimate_gradient(std::span<const Trajectory> batch, const PolicyParamsd& params, double discount,
                                  ReturnNormalization normalization) {
  if (batch.empty()) throw InvalidArgument("empty trajectory batch");

  std::vector<Eigen::VectorXd> returns;
  returns.reserve(batch.size());
  for (const auto& traj : batch) {
    const auto rewards = traj.rewards();
    returns.push_back(estimate_returns<double>(rewards, discount));
  }

  if (normalization == ReturnNormalization::PerEpisode) {
    for (auto& q : returns) q = normalize_returns(q);
  } else if (normalization == ReturnNormalization::PerBatch) {
    const Eigen::Index total =
        std::accumulate(returns.begin(), returns.end(), Eigen::Index{0}, [](Eigen::Index n, const auto& q) { return n + q.size(); });
    Eigen::VectorXd all(total);
    Eigen::Index at = 0;
    for (const auto& q : returns) {
      all.segment(at, q.size()) = q;
      at += q.size();
    }
    all = normalize_returns(all);
    at = 0;
    for (auto& q : returns) {
      q = all.segment(at, q.size());
      at += q.size();
    }
  } else if (normalization == ReturnNormalization::PerTimeStep) {
    Eigen::Index longest = 0;
    for (const auto& q : returns) longest = std::max(longest, q.size());
    for (Eigen::Index t = 0; t < longest; ++t) {
      std::vector<Eigen::Index> owners;
      for (std::size_t k = 0; k < returns.size(); ++k) {
        if (t < returns[k].size()) owners.push_back(static_cast<Eigen::Index>(k));
      }
      Eigen::VectorXd column(static_cast<Eigen::Index>(owners.size()));
      for (std::size_t i = 0; i < owners.size(); ++i) column[static_cast<Eigen::Index>(i)] = returns[static_cast<std::size_t>(owners[i])][t];
      column = normalize_returns(column);
      for (std::size_t i = 0; i < owners.size(); ++i) returns[static_cast<std::size_t>(owners[i])][t] = column[static_cast<Eigen::Index>(i)];
    }
  }

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.dim() + 1);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto& steps = batch[k].steps;
    for (std::size_t t = 0; t < steps.size(); ++t) {
      grad += returns[k][static_cast<Eigen::Index>(t)] * log_prob_grad(params, steps[t].features, steps[t].raw_action);
    }
  }
  return grad / static_cast<double>(batch.size());
}

}  // namespace evcs
