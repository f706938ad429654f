#pragma once

#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "evcs/env.hpp"

namespace evcs {

/// Price plus the number of parked EVs at each laxity level 0..L.
struct AggState {
  double price = 0.0;
  Eigen::VectorXi counts;

  int max_laxity() const { return static_cast<int>(counts.size()) - 1; }
  int total() const { return counts.sum(); }

  friend bool operator==(const AggState& a, const AggState& b) {
    return a.price == b.price && a.counts.size() == b.counts.size() && a.counts == b.counts;
  }
};

/// Per-level flows of one transition: charged a^(l), arrived x^(l), departed y^(l).
struct GroupFlow {
  Eigen::VectorXi charged;
  Eigen::VectorXi arrived;
  Eigen::VectorXi departed;
};

/// Counts EVs per laxity. Throws InvalidArgument if a laxity falls outside [0, max_laxity].
AggState aggregate(const StationState& state, int max_laxity);

/// Greedy prefix fill of the budget from laxity 0 upwards.
Eigen::VectorXi group_allocate(int total, const Eigen::Ref<const Eigen::VectorXi>& counts);

/// Group-level transition: charged EVs keep their laxity, the rest drop one
/// level, then arrivals are added and departures removed (both indexed by the
/// laxity they have at t+1). Requires total >= counts[0] since a skipped
/// zero-laxity EV has no level to drop to.
AggState agg_transition(const AggState& state, int total, const Eigen::Ref<const Eigen::VectorXi>& arrivals,
                        const Eigen::Ref<const Eigen::VectorXi>& departures, double next_price);

/// Pools all levels >= lmax into level lmax. Levels above the input's own L
/// are zero-padded.
AggState cap_merge(const AggState& state, int lmax);

/// Flows observed in a per-EV transition, bucketed by laxity. Throws if an EV
/// left with negative laxity (an uncharged departure has no level).
GroupFlow observed_flow(const StationState& before, const ActionMap& actions, const StepResult& result, int max_laxity);

/// Pure group-level simulator. Besides the counts it keeps, per laxity level,
/// the multiset of remaining demands so it can emit departures; that
/// bookkeeping never enters the policy state. Inside one level the EVs with
/// the larger remaining demand are charged first, which matches
/// llf_allocate(..., tie_break_by_demand_desc()).
class AggregateSimulator {
 public:
  AggregateSimulator(EpisodeConfig config, int max_laxity);

  void reset();
  /// Returns the reward of the slot. The next price comes from the config.
  double step(int total);
  /// Same, with an externally drawn next price (stochastic price models).
  double step(int total, double next_price);

  AggState state() const;
  int t() const { return t_; }
  double price() const { return price_; }
  bool done() const { return t_ >= config_.horizon; }
  const GroupFlow& last_flow() const { return last_flow_; }

  /// demand -> count for each laxity level.
  using Level = std::map<int, int, std::greater<>>;
  const std::vector<Level>& levels() const { return levels_; }

  friend bool operator==(const AggregateSimulator& a, const AggregateSimulator& b) {
    return a.t_ == b.t_ && a.price_ == b.price_ && a.levels_ == b.levels_;
  }

 private:
  void add_arrivals(int t, Eigen::VectorXi* arrived);

  EpisodeConfig config_;
  int max_laxity_;
  int t_ = 0;
  double price_ = 0.0;
  std::vector<Level> levels_;
  GroupFlow last_flow_;
};

}  // namespace evcs
