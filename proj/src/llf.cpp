#include "evcs/llf.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>

#include "evcs/error.hpp"

namespace evcs {

TieBreak tie_break_by_id() {
  return [](const EvRecord& a, const EvRecord& b) { return a.id < b.id; };
}

TieBreak tie_break_by_demand_desc() {
  return [](const EvRecord& a, const EvRecord& b) {
    if (a.demand != b.demand) return a.demand > b.demand;
    return a.id < b.id;
  };
}

TieBreak tie_break_by_order(std::vector<EvId> order) {
  std::unordered_map<EvId, std::size_t> rank;
  for (std::size_t k = 0; k < order.size(); ++k) rank.emplace(order[k], k);
  return [rank = std::move(rank)](const EvRecord& a, const EvRecord& b) {
    auto ra = rank.find(a.id);
    auto rb = rank.find(b.id);
    const std::size_t none = rank.size();
    const std::size_t ka = ra == rank.end() ? none : ra->second;
    const std::size_t kb = rb == rank.end() ? none : rb->second;
    if (ka != kb) return ka < kb;
    return a.id < b.id;
  };
}

ActionMap llf_allocate(int total, std::span<const EvRecord> evs, const TieBreak& tie_break) {
  if (total < 0) throw InvalidArgument("negative charging total " + std::to_string(total));
  std::vector<const EvRecord*> candidates;
  ActionMap actions;
  for (const auto& ev : evs) {
    actions[ev.id] = 0;
    if (ev.chargeable()) candidates.push_back(&ev);
  }
  if (total > static_cast<int>(candidates.size())) {
    throw InvalidArgument("charging total " + std::to_string(total) + " exceeds " +
                          std::to_string(candidates.size()) + " chargeable EVs");
  }
  auto first_to_serve = [&](const EvRecord* a, const EvRecord* b) {
    if (a->laxity() != b->laxity()) return a->laxity() < b->laxity();
    return tie_break(*a, *b);
  };
  std::partial_sort(candidates.begin(), candidates.begin() + total, candidates.end(), first_to_serve);
  for (int k = 0; k < total; ++k) actions[candidates[static_cast<std::size_t>(k)]->id] = 1;
  return actions;
}

Controller llf_controller(std::function<int(const StationState&)> total_for, TieBreak tie_break) {
  return [total_for = std::move(total_for), tie_break = std::move(tie_break)](const StationState& s) {
    return llf_allocate(total_for(s), s.evs, tie_break);
  };
}

int decision_points(const EpisodeConfig& config) {
  int points = 0;
  for (const auto& a : config.arrivals) points += std::max(0, std::min(a.parking, config.horizon - a.t));
  return points;
}

namespace {

// Independent of step()/llf_allocate(): EVs are plain (demand, parking) pairs
// and every subset of the right size is tried.
class ScheduleSearch {
 public:
  ScheduleSearch(const EpisodeConfig& config, std::span<const int> totals) : config_(config), totals_(totals) {}

  bool feasible_from(int t, std::vector<std::pair<int, int>> parked) {
    for (const auto& a : config_.arrivals) {
      if (a.t == t) parked.emplace_back(a.demand, a.parking);
    }
    std::sort(parked.begin(), parked.end());
    if (t == config_.horizon) {
      return std::all_of(parked.begin(), parked.end(), [](const auto& ev) { return ev.first == 0; });
    }
    auto key = std::make_pair(t, parked);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    const int n = static_cast<int>(parked.size());
    const int need = totals_[static_cast<std::size_t>(t)];
    bool ok = false;
    if (need >= 0 && need <= n) {
      for (unsigned mask = 0; mask < (1u << n) && !ok; ++mask) {
        if (std::popcount(mask) != need) continue;
        std::vector<std::pair<int, int>> next;
        bool valid = true;
        for (int i = 0; i < n && valid; ++i) {
          auto [d, p] = parked[static_cast<std::size_t>(i)];
          const int a = (mask >> i) & 1u;
          if (a == 1 && d == 0) valid = false;
          d -= a;
          p -= 1;
          if (d == 0) continue;        // finished, leaves
          if (p == 0) valid = false;   // leaves with demand left
          next.emplace_back(d, p);
        }
        if (valid) ok = feasible_from(t + 1, std::move(next));
      }
    }
    memo_.emplace(std::move(key), ok);
    return ok;
  }

 private:
  const EpisodeConfig& config_;
  std::span<const int> totals_;
  std::map<std::pair<int, std::vector<std::pair<int, int>>>, bool> memo_;
};

}  // namespace

bool exists_feasible_individual_schedule(const EpisodeConfig& config, std::span<const int> totals,
                                         OracleOptions options) {
  config.validate();
  if (totals.size() != static_cast<std::size_t>(config.horizon)) {
    throw InvalidArgument("expected one total per decision slot");
  }
  const int points = decision_points(config);
  if (points > options.max_decision_points) {
    throw InvalidArgument("instance has " + std::to_string(points) + " decision points, guard is " +
                          std::to_string(options.max_decision_points));
  }
  ScheduleSearch search(config, totals);
  return search.feasible_from(0, {});
}

}  // namespace evcs
