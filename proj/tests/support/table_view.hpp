#pragma once

#include <map>
#include <vector>

#include "evcs/env.hpp"

namespace evcs::testing {

/// Per-EV rows of a schedule table: d, p, laxity and action for every slot
/// t = 0..horizon. After an EV leaves, its demand is frozen, its parking clock
/// keeps running down and a finished EV is shown with laxity 0.
struct EvRows {
  std::vector<int> demand, parking, laxity, action;
};

/// Steps `config` with explicit per-slot actions and records the table.
inline std::map<EvId, EvRows> schedule_table(const EpisodeConfig& config, const std::vector<ActionMap>& actions) {
  std::map<EvId, EvRows> rows;
  std::map<EvId, EvRecord> gone;  // record at departure
  std::map<EvId, int> gone_at;
  StationState s = initial_state(config);
  auto record = [&](int t, const ActionMap* acts) {
    for (const auto& ev : s.evs) {
      auto& r = rows[ev.id];
      r.demand.push_back(ev.demand);
      r.parking.push_back(ev.parking);
      r.laxity.push_back(ev.laxity());
      r.action.push_back(acts ? acts->at(ev.id) : 0);
    }
    for (const auto& [id, ev] : gone) {
      auto& r = rows[id];
      const int p = ev.parking - (t - gone_at[id]);
      r.demand.push_back(ev.demand);
      r.parking.push_back(p);
      r.laxity.push_back(ev.demand == 0 ? 0 : p - ev.demand);
      r.action.push_back(0);
    }
  };
  for (int t = 0; t < config.horizon; ++t) {
    const ActionMap& acts = actions.at(static_cast<std::size_t>(t));
    record(t, &acts);
    StepResult r = step(config, s, acts);
    for (const auto& ev : r.departed) {
      gone[ev.id] = ev;
      gone_at[ev.id] = t + 1;
    }
    s = r.next;
  }
  record(config.horizon, nullptr);
  return rows;
}

/// The two-EV instance used by both schedule tables: EV 0 (d=3, p=4) and
/// EV 1 (d=2, p=4), five decision slots.
inline EpisodeConfig two_ev_instance(std::vector<double> prices = {10, 20, 30, 40, 50, 60}) {
  EpisodeConfig c;
  c.horizon = 5;
  c.prices = std::move(prices);
  c.arrivals = {{0, 3, 4, EvCategory::Normal}, {0, 2, 4, EvCategory::Normal}};
  return c;
}

}  // namespace evcs::testing
