// Acceptance suite: one PASS/FAIL line per criterion, detail on the same line.
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "evcs/agg.hpp"
#include "evcs/commands.hpp"
#include "evcs/llf.hpp"
#include "evcs/training.hpp"
#include "support/equivalence_oracle.hpp"
#include "support/random_instances.hpp"
#include "support/table_view.hpp"
#include "support/temp_dir.hpp"
#include "support/toy_day.hpp"

namespace {

using namespace evcs;
namespace t = evcs::testing;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  char head[128];
  std::snprintf(head, sizeof head, "%s %2d %-28s (%7.2f s) ", o.pass ? "PASS" : "FAIL", id, name.c_str(), secs);
  std::cout << head << o.detail << std::endl;
}

std::string num(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string join(const Eigen::VectorXd& v, int digits = 3) {
  std::string s;
  for (Eigen::Index k = 0; k < v.size(); ++k) s += (k ? "," : "") + num(v[k], digits);
  return s;
}

// ---- 1, 2 -----------------------------------------------------------------

using Row = std::vector<int>;

bool rows_match(const t::EvRows& got, const Row& d, const Row& p, const Row& l, const Row& a, std::string* why) {
  auto head = [](const std::vector<int>& v) { return Row(v.begin(), v.begin() + 5); };
  std::ostringstream msg;
  bool ok = true;
  auto cmp = [&](const char* what, const Row& g, const Row& e) {
    if (g != e) {
      ok = false;
      msg << what << " differs; ";
    }
  };
  cmp("d", head(got.demand), d);
  cmp("p", head(got.parking), p);
  cmp("laxity", head(got.laxity), l);
  cmp("action", head(got.action), a);
  *why += msg.str();
  return ok;
}

Outcome llf_schedule() {
  const EpisodeConfig cfg = t::two_ev_instance();
  const std::vector<int> totals{2, 1, 0, 2, 0};
  std::vector<ActionMap> actions;
  StationState s = initial_state(cfg);
  for (int k = 0; k < cfg.horizon; ++k) {
    actions.push_back(llf_allocate(totals[static_cast<std::size_t>(k)], s.evs));
    s = step(cfg, s, actions.back()).next;
  }
  const auto rows = t::schedule_table(cfg, actions);
  std::string why;
  bool ok = rows_match(rows.at(0), {3, 2, 1, 1, 0}, {4, 3, 2, 1, 0}, {1, 1, 1, 0, 0}, {1, 1, 0, 1, 0}, &why);
  ok = rows_match(rows.at(1), {2, 1, 1, 1, 0}, {4, 3, 2, 1, 0}, {2, 2, 1, 0, 0}, {1, 0, 0, 1, 0}, &why) && ok;
  const Rollout r = run_episode(cfg, llf_controller([&](const StationState& st) { return totals[st.t]; }));
  const bool charged = r.all_fully_charged();
  return {ok && charged, ok ? std::string("all 40 cells match; both EVs fully charged: ") + (charged ? "yes" : "no")
                            : why};
}

Outcome forced_schedule() {
  const EpisodeConfig cfg = t::two_ev_instance();
  const std::vector<ActionMap> actions{{{0, 1}, {1, 1}}, {{0, 0}, {1, 1}}, {{0, 0}}, {{0, 1}}, {}};
  const auto rows = t::schedule_table(cfg, actions);
  std::string why;
  bool ok = rows_match(rows.at(0), {3, 2, 2, 2, 1}, {4, 3, 2, 1, 0}, {1, 1, 0, -1, -1}, {1, 0, 0, 1, 0}, &why);
  ok = rows_match(rows.at(1), {2, 1, 0, 0, 0}, {4, 3, 2, 1, 0}, {2, 2, 0, 0, 0}, {1, 1, 0, 0, 0}, &why) && ok;
  Environment env(cfg);
  for (const auto& a : actions) env.step(a);
  const bool stranded = env.uncharged_departures() == 1;
  return {ok && stranded, ok ? "all 40 cells match; EV 1 leaves with demand 1 after laxity -1 at t=3" : why};
}

// ---- 3 --------------------------------------------------------------------

Outcome llf_property() {
  std::mt19937_64 rng(2024);
  int feasible = 0, llf_ok = 0, llf_ok_id = 0, infeasible = 0, sanity_ok = 0;
  std::string first_counterexample;
  while (feasible < 100000) {
    const EpisodeConfig cfg = t::random_instance(rng);
    const auto totals = rng() % 2 ? t::random_feasible_totals(cfg, rng) : t::random_totals(cfg, rng);
    const bool certified = exists_feasible_individual_schedule(cfg, totals);
    const bool llf = t::llf_fully_charges(cfg, totals);
    if (certified) {
      ++feasible;
      llf_ok += llf;
      llf_ok_id += t::llf_fully_charges(cfg, totals, tie_break_by_id());
      if (!llf && first_counterexample.empty()) {
        std::ostringstream os;
        os << "T=" << cfg.horizon << " evs";
        for (const auto& a : cfg.arrivals) os << " (t" << a.t << ",d" << a.demand << ",p" << a.parking << ")";
        os << " totals";
        for (int x : totals) os << ' ' << x;
        first_counterexample = os.str();
      }
    } else {
      ++infeasible;
      sanity_ok += !llf;
    }
  }
  const bool pass = llf_ok == feasible && sanity_ok == infeasible;
  std::string detail = "LLF fully charged " + std::to_string(llf_ok) + "/" + std::to_string(feasible) +
                       " certified-feasible cases (id tie-break " + std::to_string(llf_ok_id) +
                       "); sanity direction " + std::to_string(sanity_ok) + "/" + std::to_string(infeasible);
  if (!first_counterexample.empty()) detail += "; first counterexample: " + first_counterexample;
  return {pass, detail};
}

// ---- 4 --------------------------------------------------------------------

Outcome equivalence() {
  constexpr int kL = 3;
  std::mt19937_64 rng(4242);
  int trajectories = 0, steps = 0;
  for (; trajectories < 600; ++trajectories) {
    const EpisodeConfig cfg = t::random_instance(rng);
    const auto policy = t::hashed_policy(rng());
    Environment env(cfg);
    AggregateSimulator sim(cfg, kL);
    std::vector<double> per_ev, group;
    while (!env.done()) {
      const AggState g = aggregate(env.state(), kL);
      if (!(g == sim.state())) return {false, "state mismatch in trajectory " + std::to_string(trajectories)};
      const int total = policy(env.state().t, g.price, g.counts);
      per_ev.push_back(env.step(llf_allocate(total, env.state().evs, tie_break_by_demand_desc())).reward);
      group.push_back(sim.step(total));
      ++steps;
    }
    if (per_ev != group) return {false, "reward sequence mismatch in trajectory " + std::to_string(trajectories)};
  }
  testing::InstanceShape shape;
  shape.max_evs = 3;
  shape.max_horizon = 5;
  double worst = 0.0;
  int values = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const EpisodeConfig cfg = t::random_instance(rng, shape);
    std::uniform_int_distribution<int> levels_d(1, 3);
    const t::MarkovPrices prices = t::random_markov_prices(rng, levels_d(rng));
    for (int p = 0; p < 6; ++p) {
      const t::GroupPolicy policy = p < 5 ? t::hashed_policy(rng()) : t::GroupPolicy{};
      const double v1 = t::PerEvDp(cfg, prices, kL, policy).value();
      const double v2 = t::GroupDp(cfg, prices, kL, policy).value();
      worst = std::max(worst, std::abs(v1 - v2));
      ++values;
    }
  }
  return {worst <= 1e-12, std::to_string(trajectories) + " trajectories (" + std::to_string(steps) +
                              " steps) identical rewards; " + std::to_string(values) +
                              " DP values, max |diff| " + num(worst, 15)};
}

// ---- 5 --------------------------------------------------------------------

Outcome gradient_check() {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(-2, 2), s(0.3, 2.0);
  std::uniform_int_distribution<int> dim_d(1, 14);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = dim_d(rng);
    PolicyParamsd p = PolicyParamsd::zeros(dim, s(rng));
    Eigen::VectorXd x(dim);
    for (int i = 0; i < dim; ++i) {
      p.weights[i] = u(rng);
      x[i] = u(rng);
    }
    p.bias = u(rng);
    const double action = policy_mean(p, x) + p.sigma * u(rng);
    const Eigen::VectorXd g = log_prob_grad(p, x, action);
    for (int k = 0; k <= dim; ++k) {
      const double h = 1e-5;
      PolicyParamsd up = p, down = p;
      (k < dim ? up.weights[k] : up.bias) += h;
      (k < dim ? down.weights[k] : down.bias) -= h;
      const double fd = (log_prob(up, x, action) - log_prob(down, x, action)) / (2 * h);
      worst = std::max(worst, std::abs(fd - g[k]) / std::max(1.0, std::abs(g[k])));
    }
  }
  return {worst < 1e-6, "100 triples, max relative error " + num(worst * 1e9, 3) + "e-9"};
}

// ---- 6 --------------------------------------------------------------------

Outcome group_allocate_check() {
  std::mt19937_64 rng(66);
  std::uniform_int_distribution<int> cnt(0, 5), len(1, 13);
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXi counts(len(rng));
    for (auto& x : counts) x = cnt(rng);
    std::uniform_int_distribution<int> total_d(0, counts.sum());
    const int total = total_d(rng);
    const Eigen::VectorXi charged = group_allocate(total, counts);
    int prefix_c = 0, prefix_n = 0;
    for (Eigen::Index l = 0; l < counts.size(); ++l) {
      prefix_c += charged[l];
      prefix_n += counts[l];
      if (prefix_c != std::min(total, prefix_n)) return {false, "prefix identity broken at pair " + std::to_string(trial)};
    }
  }
  constexpr int kL = 6;
  std::uniform_int_distribution<int> n_d(0, 10), dem(1, 8), lax(0, kL);
  for (int trial = 0; trial < 1000; ++trial) {
    StationState s;
    const int n = n_d(rng);
    for (int k = 0; k < n; ++k) {
      const int d = dem(rng);
      s.evs.push_back({k, d, d + lax(rng)});
    }
    std::uniform_int_distribution<int> total_d(0, n);
    const int total = total_d(rng);
    for (const TieBreak& tb : {tie_break_by_id(), tie_break_by_demand_desc()}) {
      const ActionMap a = llf_allocate(total, s.evs, tb);
      Eigen::VectorXi tally = Eigen::VectorXi::Zero(kL + 1);
      for (const auto& ev : s.evs) tally[ev.laxity()] += a.at(ev.id);
      if (tally != group_allocate(total, aggregate(s, kL).counts)) {
        return {false, "LLF tally differs at state " + std::to_string(trial)};
      }
    }
  }
  return {true, "prefix identity on 1000 pairs; LLF tallies equal on 1000 states x 2 tie-breaks"};
}

// ---- 7 --------------------------------------------------------------------

Outcome toy_training() {
  double best = 0.0;
  const std::vector<int> optimum = t::enumerated_optimum(t::toy_day(), &best);
  const std::vector<EpisodeConfig> days{t::toy_day()};
  FeatureMap map;
  map.max_laxity = 2;
  map.lmax = 2;
  map.fit(days);
  TrainConfig cfg;
  cfg.step_size = 0.02;
  cfg.iterations = 2000;
  cfg.rollouts = 16;
  cfg.seed = 3;
  const TrainResult r = train(days, PolicyParamsd::zeros(map.dim(), 1.0), cfg, map.mapper());
  // First iterate from which every later greedy schedule is optimal.
  int settled = -1;
  for (int it = static_cast<int>(r.trace.size()) - 1; it >= 0; --it) {
    const Eigen::VectorXd& packed = r.trace[static_cast<std::size_t>(it)];
    PolicyParamsd p{packed.head(map.dim()), packed[map.dim()], r.sigmas[static_cast<std::size_t>(it)]};
    std::vector<int> actions;
    evaluate_policy(days[0], p, map.mapper(), &actions);
    if (actions != optimum) break;
    settled = it;
  }
  std::vector<int> final_actions;
  const double reward = evaluate_policy(days[0], r.params, map.mapper(), &final_actions);
  const bool cheap_only = final_actions == std::vector<int>{1, 0, 1, 0};
  const bool pass = cheap_only && reward == best && settled >= 0 && settled < 2000;
  std::string detail = "greedy schedule ";
  for (int a : final_actions) detail += std::to_string(a);
  detail += ", reward " + num(reward, 1) + " (optimum " + num(best, 1) + "); optimal at every iterate from " +
            std::to_string(settled) + " of " + std::to_string(r.iterations);
  return {pass, detail};
}

// ---- 8 to 11 --------------------------------------------------------------

struct Experiment {
  t::TempDir dir;
  fs::path train_dir, test_dir;
  std::optional<TrainOutput> pg, pg_again, pg_lmax6, qe;
  std::vector<DayData> train_days, test_days;

  Experiment() {
    train_dir = dir.path() / "train";
    test_dir = dir.path() / "test";
    GenerateConfig g = default_generate_config();
    g.days = 20;
    g.seed = 7;
    cmd_generate(g, train_dir);
    g.days = 5;
    g.seed = 8;
    cmd_generate(g, test_dir);
    train_days = load_day_dir(train_dir, load_dataset_info(train_dir));
    test_days = load_day_dir(test_dir, load_dataset_info(test_dir));
  }

  const TrainOutput& pg_model() {
    if (!pg) pg = cmd_train(train_dir, TrainOptions{}, dir.path() / "pg.json");
    return *pg;
  }
  const TrainOutput& pg6_model() {
    TrainOptions o;
    o.lmax = 6;
    if (!pg_lmax6) pg_lmax6 = cmd_train(train_dir, o, dir.path() / "pg6.json");
    return *pg_lmax6;
  }
  const TrainOutput& qe_model() {
    TrainOptions o;
    o.algo = Algorithm::QEstimate;
    if (!qe) qe = cmd_train(train_dir, o, dir.path() / "qe.json");
    return *qe;
  }
};

Outcome qualitative(Experiment& ex) {
  const TrainOutput& out = ex.pg_model();
  const auto& curve = out.curve;
  constexpr std::size_t kWindow = 50;
  std::vector<double> blocks, stderrs;
  for (std::size_t b = 0; b + kWindow <= curve.size(); b += kWindow) {
    double m = 0, v = 0;
    for (std::size_t k = b; k < b + kWindow; ++k) m += curve[k];
    m /= kWindow;
    for (std::size_t k = b; k < b + kWindow; ++k) v += (curve[k] - m) * (curve[k] - m);
    blocks.push_back(m);
    stderrs.push_back(std::sqrt(v / (kWindow - 1) / kWindow));
  }
  int drops = 0, significant = 0;
  double worst_drop = 0.0;
  for (std::size_t b = 1; b < blocks.size(); ++b) {
    const double diff = blocks[b] - blocks[b - 1];
    if (diff < 0) {
      ++drops;
      worst_drop = std::min(worst_drop, diff);
      if (diff < -2.0 * std::hypot(stderrs[b], stderrs[b - 1])) ++significant;
    }
  }
  const bool monotone = drops == 0;

  const Model& m = out.model;
  const PolicyParamsd raw = destandardize(m.params, m.features);
  auto pattern = [](const Eigen::VectorXd& w, std::string* why) {
    const double price = w[0], n0 = w[1];
    bool ok = price < 0 && n0 > 0;
    for (Eigen::Index l = 1; l + 1 < w.size(); ++l) {
      if (std::abs(w[l + 1]) >= std::abs(n0)) ok = false;
      if (l >= 6 && std::abs(w[l + 1]) >= 0.25 * n0) ok = false;
    }
    *why = "price " + num(price, 3) + ", n0 " + num(n0, 3);
    return ok;
  };
  std::string raw_why, std_why;
  const bool raw_ok = pattern(raw.weights, &raw_why);
  const bool std_ok = pattern(m.params.weights, &std_why);

  std::string detail = "(i) " + std::to_string(blocks.size()) + " block means " + num(blocks.front(), 1) + " -> " +
                       num(blocks.back(), 1) + ", " + std::to_string(drops) + " drops (worst " +
                       num(worst_drop, 1) + ", " + std::to_string(significant) + " beyond 2 s.e.); (ii) raw [" +
                       join(raw.weights) + "] " + (raw_ok ? "matches" : "breaks") + " pattern (" + raw_why +
                       "); standardized [" + join(m.params.weights) + "] " + (std_ok ? "matches" : "breaks") +
                       " (" + std_why + ")";
  return {monotone && raw_ok, detail};
}

Outcome comparison(Experiment& ex) {
  const EvalTable pg = evaluate_model(ex.pg_model().model, ex.test_days);
  const EvalTable qe = evaluate_model(ex.qe_model().model, ex.test_days);
  const double gain = percent_improvement(pg.average, qe.average);
  const double reference = percent_improvement(-5013.8, -5236.9);
  const bool arithmetic = std::abs(reference - 4.26) < 0.005;
  const Eigen::VectorXd theta = ex.qe_model().model.theta;
  return {gain >= 0.0 && arithmetic, "held-out average pg " + num(pg.average) + " vs qe " + num(qe.average) + " (" +
                                         num(gain) + "%), qe theta [" + join(theta) +
                                         "]; table arithmetic -5013.8 vs -5236.9 gives " + num(reference) + "%"};
}

Outcome merge_robustness(Experiment& ex) {
  const EvalTable full = evaluate_model(ex.pg_model().model, ex.test_days);
  const EvalTable merged = evaluate_model(ex.pg6_model().model, ex.test_days);
  const EvalTable full_train = evaluate_model(ex.pg_model().model, ex.train_days);
  const EvalTable merged_train = evaluate_model(ex.pg6_model().model, ex.train_days);
  const double gap = std::abs(merged.average - full.average) / std::abs(full.average) * 100.0;
  const double gap_train = std::abs(merged_train.average - full_train.average) / std::abs(full_train.average) * 100.0;
  return {gap < 2.0, "held-out L=12 " + num(full.average) + " vs L_max=6 " + num(merged.average) + " (" + num(gap) +
                         "%); training days " + num(full_train.average) + " vs " + num(merged_train.average) + " (" +
                         num(gap_train) + "%)"};
}

Outcome determinism(Experiment& ex) {
  const TrainOutput& first = ex.pg_model();
  const std::string a = t::read_file(first.model_path);
  const std::string curve_a = t::read_file(first.curve_path);
  ex.pg_again = cmd_train(ex.train_dir, TrainOptions{}, ex.dir.path() / "pg_again.json");
  const std::string b = t::read_file(ex.pg_again->model_path);
  const std::string curve_b = t::read_file(ex.pg_again->curve_path);
  const bool same = a == b && !a.empty();
  return {same, std::string("model files ") + (same ? "byte-identical" : "differ") + " (" + std::to_string(a.size()) +
                    " bytes, hash " + fnv1a_hex(a) + "); curves " + (curve_a == curve_b ? "identical" : "differ")};
}

}  // namespace

int main() {
  report(1, "llf-schedule-golden", llf_schedule);
  report(2, "forced-schedule-golden", forced_schedule);
  report(3, "llf-disaggregation", llf_property);
  report(4, "aggregation-equivalence", equivalence);
  report(5, "gradient-check", gradient_check);
  report(6, "group-allocate", group_allocate_check);
  report(7, "toy-training", toy_training);
  Experiment ex;
  report(8, "qualitative-training", [&] { return qualitative(ex); });
  report(9, "comparison-direction", [&] { return comparison(ex); });
  report(10, "lmax-merge", [&] { return merge_robustness(ex); });
  report(11, "determinism", [&] { return determinism(ex); });
  std::cout << failures << " of 11 criteria failed" << std::endl;
  return failures == 0 ? 0 : 1;
}
