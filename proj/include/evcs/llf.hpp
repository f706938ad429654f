#pragma once

#include <functional>
#include <span>

#include "evcs/env.hpp"

namespace evcs {

inline int laxity(int demand, int parking) { return parking - demand; }

/// Strict weak order used among EVs of equal laxity.
using TieBreak = std::function<bool(const EvRecord&, const EvRecord&)>;

/// Ascending id.
TieBreak tie_break_by_id();
/// Larger remaining demand first, then ascending id (the default). Keeps the
/// per-EV simulation in step with the group-level one.
TieBreak tie_break_by_demand_desc();
/// Position in `order`; ids not listed come last, by ascending id.
TieBreak tie_break_by_order(std::vector<EvId> order);

/// Least-laxity-first disaggregation of a total charging budget: exactly
/// `total` chargeable EVs get action 1, taken in ascending laxity.
ActionMap llf_allocate(int total, std::span<const EvRecord> evs, const TieBreak& tie_break = tie_break_by_demand_desc());

/// Controller that asks `total_for` for a budget and disaggregates it with LLF.
Controller llf_controller(std::function<int(const StationState&)> total_for, TieBreak tie_break = tie_break_by_demand_desc());

struct OracleOptions {
  /// Upper bound on the number of (EV, slot) binary decisions of the instance.
  int max_decision_points = 32;
};

/// Exhaustive search: is there any per-EV binary schedule whose per-slot sums
/// equal `totals` and that leaves every EV fully charged by departure (EVs
/// still parked at the horizon must also be done)? `totals` has one entry per
/// decision slot. Throws InvalidArgument when the instance exceeds the guard.
bool exists_feasible_individual_schedule(const EpisodeConfig& config, std::span<const int> totals,
                                         OracleOptions options = {});

/// Number of (EV, slot) decisions the oracle would have to enumerate.
int decision_points(const EpisodeConfig& config);

}  // namespace evcs
