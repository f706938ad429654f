#include "evcs/agg.hpp"

#include <algorithm>
#include <string>

#include "evcs/error.hpp"

namespace evcs {

AggState aggregate(const StationState& state, int max_laxity) {
  if (max_laxity < 0) throw InvalidArgument("max laxity must be non-negative");
  AggState out;
  out.price = state.price;
  out.counts = Eigen::VectorXi::Zero(max_laxity + 1);
  for (const auto& ev : state.evs) {
    const int l = ev.laxity();
    if (l < 0 || l > max_laxity) {
      throw InvalidArgument("EV " + std::to_string(ev.id) + " has laxity " + std::to_string(l) + " outside [0, " +
                            std::to_string(max_laxity) + "]");
    }
    ++out.counts[l];
  }
  return out;
}

Eigen::VectorXi group_allocate(int total, const Eigen::Ref<const Eigen::VectorXi>& counts) {
  if (total < 0) throw InvalidArgument("negative charging total");
  if (total > counts.sum()) {
    throw InvalidArgument("charging total " + std::to_string(total) + " exceeds " + std::to_string(counts.sum()) +
                          " parked EVs");
  }
  Eigen::VectorXi charged = Eigen::VectorXi::Zero(counts.size());
  int left = total;
  for (Eigen::Index l = 0; l < counts.size() && left > 0; ++l) {
    charged[l] = std::min(counts[l], left);
    left -= charged[l];
  }
  return charged;
}

AggState agg_transition(const AggState& state, int total, const Eigen::Ref<const Eigen::VectorXi>& arrivals,
                        const Eigen::Ref<const Eigen::VectorXi>& departures, double next_price) {
  const Eigen::Index levels = state.counts.size();
  if (arrivals.size() != levels || departures.size() != levels) {
    throw InvalidArgument("flow vectors must have one entry per laxity level");
  }
  if (levels > 0 && total < state.counts[0]) {
    throw InvalidArgument("charging total below the zero-laxity count drives EVs to negative laxity");
  }
  const Eigen::VectorXi charged = group_allocate(total, state.counts);
  const Eigen::VectorXi skipped = state.counts - charged;

  AggState next;
  next.price = next_price;
  next.counts = charged + arrivals - departures;
  next.counts.head(levels - 1) += skipped.tail(levels - 1);
  if ((next.counts.array() < 0).any()) throw InvalidArgument("inconsistent flows: negative group count");
  return next;
}

AggState cap_merge(const AggState& state, int lmax) {
  if (lmax < 1) throw InvalidArgument("lmax must be at least 1");
  AggState out;
  out.price = state.price;
  out.counts = Eigen::VectorXi::Zero(lmax + 1);
  const Eigen::Index kept = std::min<Eigen::Index>(lmax, state.counts.size());
  out.counts.head(kept) = state.counts.head(kept);
  if (state.counts.size() > lmax) out.counts[lmax] = state.counts.tail(state.counts.size() - lmax).sum();
  return out;
}

GroupFlow observed_flow(const StationState& before, const ActionMap& actions, const StepResult& result,
                        int max_laxity) {
  GroupFlow flow;
  flow.charged = Eigen::VectorXi::Zero(max_laxity + 1);
  flow.arrived = Eigen::VectorXi::Zero(max_laxity + 1);
  flow.departed = Eigen::VectorXi::Zero(max_laxity + 1);
  auto level = [&](const EvRecord& ev) {
    const int l = ev.laxity();
    if (l < 0 || l > max_laxity) {
      throw InvalidArgument("EV " + std::to_string(ev.id) + " has laxity " + std::to_string(l) + " outside [0, " +
                            std::to_string(max_laxity) + "]");
    }
    return l;
  };
  for (const auto& ev : before.evs) {
    if (actions.at(ev.id) == 1) ++flow.charged[level(ev)];
  }
  for (const auto& ev : result.arrived) ++flow.arrived[level(ev)];
  for (const auto& ev : result.departed) ++flow.departed[level(ev)];
  return flow;
}

AggregateSimulator::AggregateSimulator(EpisodeConfig config, int max_laxity)
    : config_(std::move(config)), max_laxity_(max_laxity) {
  config_.validate();
  if (max_laxity_ < 0) throw InvalidArgument("max laxity must be non-negative");
  reset();
}

void AggregateSimulator::reset() {
  t_ = 0;
  price_ = config_.prices.front();
  levels_.assign(static_cast<std::size_t>(max_laxity_) + 1, Level{});
  add_arrivals(0, nullptr);
}

void AggregateSimulator::add_arrivals(int t, Eigen::VectorXi* arrived) {
  for (const auto& a : config_.arrivals) {
    if (a.t != t) continue;
    const int l = a.parking - a.demand;
    if (l > max_laxity_) {
      throw InvalidArgument("arrival laxity " + std::to_string(l) + " exceeds " + std::to_string(max_laxity_));
    }
    ++levels_[static_cast<std::size_t>(l)][a.demand];
    if (arrived) ++(*arrived)[l];
  }
}

AggState AggregateSimulator::state() const {
  AggState s;
  s.price = price_;
  s.counts.resize(max_laxity_ + 1);
  for (int l = 0; l <= max_laxity_; ++l) {
    int n = 0;
    for (const auto& [d, c] : levels_[static_cast<std::size_t>(l)]) n += c;
    s.counts[l] = n;
  }
  return s;
}

double AggregateSimulator::step(int total) {
  if (done()) throw InvalidArgument("cannot step past the horizon");
  return step(total, config_.prices[static_cast<std::size_t>(t_) + 1]);
}

double AggregateSimulator::step(int total, double next_price) {
  if (done()) throw InvalidArgument("cannot step past the horizon");
  const AggState before = state();
  if (total < before.counts[0]) {
    throw InvalidArgument("charging total below the zero-laxity count drives EVs to negative laxity");
  }
  const Eigen::VectorXi charged = group_allocate(total, before.counts);

  const auto levels = static_cast<std::size_t>(max_laxity_) + 1;
  std::vector<Level> next(levels);
  Eigen::VectorXi departed = Eigen::VectorXi::Zero(max_laxity_ + 1);
  for (std::size_t l = 0; l < levels; ++l) {
    int to_charge = charged[static_cast<Eigen::Index>(l)];
    // Level maps iterate from the largest demand down.
    for (const auto& [d, c] : levels_[l]) {
      const int hit = std::min(c, to_charge);
      to_charge -= hit;
      if (hit > 0) {
        if (d - 1 == 0) {
          departed[static_cast<Eigen::Index>(l)] += hit;
        } else {
          next[l][d - 1] += hit;
        }
      }
      if (c - hit > 0) {
        // Skipped EVs lose one slot of slack; level 0 cannot be skipped.
        next[l - 1][d] += c - hit;
      }
    }
  }

  const double reward = -price_ * total;
  levels_ = std::move(next);
  ++t_;
  price_ = next_price;
  Eigen::VectorXi arrived = Eigen::VectorXi::Zero(max_laxity_ + 1);
  add_arrivals(t_, &arrived);

  last_flow_ = GroupFlow{charged, arrived, departed};
  return reward;
}

}  // namespace evcs
