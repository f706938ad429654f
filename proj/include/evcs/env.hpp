#pragma once

#include <functional>
#include <map>
#include <string_view>
#include <vector>

namespace evcs {

using EvId = int;

/// One parked EV. Both counters are in slots at full charging power.
struct EvRecord {
  EvId id = 0;
  int demand = 0;   // remaining slots of charging needed
  int parking = 0;  // remaining slots parked

  int laxity() const { return parking - demand; }
  bool chargeable() const { return demand > 0; }

  friend bool operator==(const EvRecord&, const EvRecord&) = default;
};

/// Original (per-EV) MDP state. `evs` is kept sorted by id.
struct StationState {
  int t = 0;
  double price = 0.0;
  std::vector<EvRecord> evs;

  int chargeable_count() const;
  /// EVs with zero laxity; all of them must charge this slot to finish on time.
  int urgent_count() const;
  const EvRecord* find(EvId id) const;
};

enum class EvCategory { Emergent, Normal, Residential };

std::string_view to_string(EvCategory c);
EvCategory parse_category(std::string_view s);

struct ArrivalEvent {
  int t = 0;
  int demand = 1;
  int parking = 1;
  EvCategory category = EvCategory::Normal;

  friend bool operator==(const ArrivalEvent&, const ArrivalEvent&) = default;
};

/// One simulated day. Decisions are taken at t = 0 .. horizon-1; t = horizon is
/// the terminal state, so `prices` holds horizon+1 entries. The EV created from
/// `arrivals[k]` gets id k.
struct EpisodeConfig {
  int horizon = 0;
  double discount = 1.0;
  std::vector<double> prices;
  std::vector<ArrivalEvent> arrivals;

  /// Throws InvalidArgument on any violated invariant.
  void validate() const;
};

/// Per-EV binary actions keyed by id. Must cover exactly the parked EVs.
using ActionMap = std::map<EvId, int>;

struct StepResult {
  StationState next;
  double reward = 0.0;
  int total_action = 0;
  /// Records as they were after the update, at the moment they left.
  std::vector<EvRecord> departed;
  std::vector<EvRecord> arrived;
  int uncharged_departures = 0;
};

/// Parked EVs at t = 0 (arrivals at t = 0 are inserted before the first decision).
StationState initial_state(const EpisodeConfig& config);

/// Applies per-EV actions for slot state.t and advances one slot.
/// Reward is -price(t) * sum(actions). EVs whose demand or parking reaches 0
/// leave; arrivals for t+1 are inserted afterwards.
StepResult step(const EpisodeConfig& config, const StationState& state, const ActionMap& actions);

/// True iff every parked EV has parking >= demand.
bool feasibility_invariant(const StationState& state);

/// Stateful wrapper around step() that keeps the running episode statistics.
class Environment {
 public:
  explicit Environment(EpisodeConfig config);

  void reset();
  StepResult step(const ActionMap& actions);

  const StationState& state() const { return state_; }
  const EpisodeConfig& config() const { return config_; }
  bool done() const { return state_.t >= config_.horizon; }

  double discounted_return() const { return discounted_return_; }
  int uncharged_departures() const { return uncharged_departures_; }
  /// Departures with demand left; the episode is then marked infeasible
  /// rather than aborted.
  bool infeasible() const { return uncharged_departures_ > 0; }

 private:
  EpisodeConfig config_;
  StationState state_;
  double discounted_return_ = 0.0;
  double discount_power_ = 1.0;
  int uncharged_departures_ = 0;
};

using Controller = std::function<ActionMap(const StationState&)>;

struct RolloutStep {
  StationState state;
  int total_action = 0;
  double reward = 0.0;
};

struct Rollout {
  std::vector<RolloutStep> steps;
  StationState terminal;
  std::vector<EvRecord> departed;
  double total_reward = 0.0;  // sum of discount^t * r_t
  int uncharged_departures = 0;

  /// EVs still parked at the horizon with demand left.
  int unfinished_at_horizon() const;
  bool all_fully_charged() const { return uncharged_departures == 0 && unfinished_at_horizon() == 0; }
};

Rollout run_episode(const EpisodeConfig& config, const Controller& controller);

}  // namespace evcs
