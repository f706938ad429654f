#include "evcs/env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "evcs/error.hpp"

namespace evcs {

int StationState::chargeable_count() const {
  return static_cast<int>(std::count_if(evs.begin(), evs.end(), [](const EvRecord& ev) { return ev.chargeable(); }));
}

int StationState::urgent_count() const {
  return static_cast<int>(
      std::count_if(evs.begin(), evs.end(), [](const EvRecord& ev) { return ev.chargeable() && ev.laxity() == 0; }));
}

const EvRecord* StationState::find(EvId id) const {
  auto it = std::lower_bound(evs.begin(), evs.end(), id, [](const EvRecord& ev, EvId key) { return ev.id < key; });
  return (it != evs.end() && it->id == id) ? &*it : nullptr;
}

std::string_view to_string(EvCategory c) {
  switch (c) {
    case EvCategory::Emergent:
      return "emergent";
    case EvCategory::Normal:
      return "normal";
    case EvCategory::Residential:
      return "residential";
  }
  return "normal";
}

EvCategory parse_category(std::string_view s) {
  if (s == "emergent") return EvCategory::Emergent;
  if (s == "normal") return EvCategory::Normal;
  if (s == "residential") return EvCategory::Residential;
  throw InvalidArgument("unknown EV category '" + std::string(s) + "'");
}

void EpisodeConfig::validate() const {
  if (horizon < 0) throw InvalidArgument("horizon must be non-negative");
  if (!(discount > 0.0 && discount <= 1.0)) throw InvalidArgument("discount must lie in (0, 1]");
  if (prices.size() != static_cast<std::size_t>(horizon) + 1) {
    throw InvalidArgument("expected " + std::to_string(horizon + 1) + " prices, got " +
                          std::to_string(prices.size()));
  }
  for (double p : prices) {
    if (!std::isfinite(p)) throw InvalidArgument("non-finite price");
  }
  for (std::size_t k = 0; k < arrivals.size(); ++k) {
    const auto& a = arrivals[k];
    if (a.t < 0 || a.t > horizon) throw InvalidArgument("arrival " + std::to_string(k) + " outside [0, horizon]");
    if (a.demand <= 0 || a.parking <= 0) throw InvalidArgument("arrival " + std::to_string(k) + " must have positive demand and parking");
    if (a.demand > a.parking) throw InvalidArgument("arrival " + std::to_string(k) + " has demand > parking");
  }
}

namespace {

void insert_arrivals(const EpisodeConfig& config, int t, StationState& state, std::vector<EvRecord>* arrived) {
  for (std::size_t k = 0; k < config.arrivals.size(); ++k) {
    const auto& a = config.arrivals[k];
    if (a.t != t) continue;
    EvRecord ev{static_cast<EvId>(k), a.demand, a.parking};
    state.evs.push_back(ev);
    if (arrived) arrived->push_back(ev);
  }
  std::sort(state.evs.begin(), state.evs.end(), [](const EvRecord& a, const EvRecord& b) { return a.id < b.id; });
}

}  // namespace

StationState initial_state(const EpisodeConfig& config) {
  config.validate();
  StationState s;
  s.t = 0;
  s.price = config.prices.front();
  insert_arrivals(config, 0, s, nullptr);
  return s;
}

StepResult step(const EpisodeConfig& config, const StationState& state, const ActionMap& actions) {
  if (state.t < 0 || state.t >= config.horizon) {
    throw InvalidArgument("cannot step at t=" + std::to_string(state.t) + " with horizon " +
                          std::to_string(config.horizon));
  }
  for (const auto& [id, a] : actions) {
    const EvRecord* ev = state.find(id);
    if (!ev) throw InvalidArgument("action for unknown EV id " + std::to_string(id));
    if (a != 0 && a != 1) throw InvalidArgument("action for EV " + std::to_string(id) + " is not binary");
    if (a == 1 && ev->demand == 0) throw InvalidArgument("EV " + std::to_string(id) + " has no demand left");
  }
  if (actions.size() != state.evs.size()) throw InvalidArgument("actions must cover every parked EV");

  StepResult out;
  out.next.t = state.t + 1;
  out.next.price = config.prices[static_cast<std::size_t>(out.next.t)];
  for (const auto& ev : state.evs) {
    const int a = actions.at(ev.id);
    out.total_action += a;
    EvRecord updated{ev.id, ev.demand - a, ev.parking - 1};
    if (updated.demand == 0 || updated.parking == 0) {
      if (updated.demand > 0) ++out.uncharged_departures;
      out.departed.push_back(updated);
    } else {
      out.next.evs.push_back(updated);
    }
  }
  out.reward = -state.price * out.total_action;
  insert_arrivals(config, out.next.t, out.next, &out.arrived);
  return out;
}

bool feasibility_invariant(const StationState& state) {
  return std::all_of(state.evs.begin(), state.evs.end(), [](const EvRecord& ev) { return ev.parking >= ev.demand; });
}

Environment::Environment(EpisodeConfig config) : config_(std::move(config)) { reset(); }

void Environment::reset() {
  state_ = initial_state(config_);
  discounted_return_ = 0.0;
  discount_power_ = 1.0;
  uncharged_departures_ = 0;
}

StepResult Environment::step(const ActionMap& actions) {
  StepResult r = evcs::step(config_, state_, actions);
  discounted_return_ += discount_power_ * r.reward;
  discount_power_ *= config_.discount;
  uncharged_departures_ += r.uncharged_departures;
  state_ = r.next;
  return r;
}

int Rollout::unfinished_at_horizon() const {
  return static_cast<int>(
      std::count_if(terminal.evs.begin(), terminal.evs.end(), [](const EvRecord& ev) { return ev.demand > 0; }));
}

Rollout run_episode(const EpisodeConfig& config, const Controller& controller) {
  Environment env(config);
  Rollout out;
  out.steps.reserve(static_cast<std::size_t>(config.horizon));
  while (!env.done()) {
    RolloutStep rec;
    rec.state = env.state();
    StepResult r = env.step(controller(rec.state));
    rec.total_action = r.total_action;
    rec.reward = r.reward;
    out.steps.push_back(std::move(rec));
    out.departed.insert(out.departed.end(), r.departed.begin(), r.departed.end());
  }
  out.terminal = env.state();
  out.total_reward = env.discounted_return();
  out.uncharged_departures = env.uncharged_departures();
  return out;
}

}  // namespace evcs
