#include "evcs/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>

#include "evcs/error.hpp"

namespace evcs {

using nlohmann::json;

namespace {

// Field-path aware accessors for config parsing.
const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw DataError("config: missing field '" + path + key + "'");
  return j.at(key);
}

template <typename T>
T get_as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw DataError("config: field '" + path + "' has the wrong type");
  }
}

template <typename T>
T required(const json& j, const std::string& key, const std::string& prefix) {
  return get_as<T>(field(j, key, prefix), prefix + key);
}

Triangular parse_triangular(const json& j, const std::string& path) {
  Triangular t;
  t.min = required<int>(j, "min", path + ".");
  t.max = required<int>(j, "max", path + ".");
  t.mode = required<int>(j, "mode", path + ".");
  return t;
}

std::array<double, 24> parse_hourly(const json& j, const std::string& path) {
  const auto v = get_as<std::vector<double>>(j, path);
  if (v.size() != 24) throw DataError("config: field '" + path + "' needs 24 entries");
  std::array<double, 24> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

json triangular_json(const Triangular& t) { return {{"min", t.min}, {"max", t.max}, {"mode", t.mode}}; }

std::uint64_t day_seed(std::uint64_t seed, int day, int stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(day), static_cast<std::uint32_t>(stream)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::string day_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "day_%03d", k);
  return buf;
}

std::string add_days(const std::string& date, int k) {
  int y = 0, m = 0, d = 0;
  if (std::sscanf(date.c_str(), "%d-%d-%d", &y, &m, &d) != 3) throw DataError("config: bad start_date '" + date + "'");
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw DataError("config: bad start_date '" + date + "'");
  const year_month_day next{sys_days{ymd} + days{k}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(next.year()), static_cast<unsigned>(next.month()),
                static_cast<unsigned>(next.day()));
  return buf;
}

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<DayData> load_days_checked(const fs::path& data_dir, const DatasetInfo& info) {
  auto days = load_day_dir(data_dir, info);
  if (days.empty()) throw DataError("no training days in " + data_dir.string());
  return days;
}

std::vector<EpisodeConfig> episodes_of(const std::vector<DayData>& days) {
  std::vector<EpisodeConfig> out;
  out.reserve(days.size());
  for (const auto& d : days) out.push_back(d.episode);
  return out;
}

void check_compatible(const Model& model, const DatasetInfo& info) {
  if (model.max_laxity != info.max_laxity) {
    throw DataError("model was trained with max laxity " + std::to_string(model.max_laxity) + " but data uses " +
                    std::to_string(info.max_laxity));
  }
}

}  // namespace

GenerateConfig default_generate_config() {
  GenerateConfig c;
  c.profiles = default_profiles();
  c.price = default_price_profile();
  return c;
}

json to_json(const GenerateConfig& c) {
  json profiles = json::array();
  for (const auto& p : c.profiles) {
    profiles.push_back({{"category", std::string(to_string(p.category))},
                        {"hourly_rates", p.hourly_rates},
                        {"demand", triangular_json(p.demand)},
                        {"parking", triangular_json(p.parking)}});
  }
  return {{"days", c.days},
          {"seed", c.seed},
          {"start_date", c.start_date},
          {"horizon", c.dataset.horizon},
          {"slot_minutes", c.dataset.slot_minutes},
          {"max_laxity", c.dataset.max_laxity},
          {"price", {{"hourly_mean", c.price.hourly_mean}, {"noise", c.price.noise}}},
          {"profiles", profiles}};
}

GenerateConfig parse_generate_config(const json& j) {
  GenerateConfig c = default_generate_config();
  c.days = required<int>(j, "days", "");
  if (c.days < 0) throw DataError("config: field 'days' must be non-negative");
  c.dataset.horizon = required<int>(j, "horizon", "");
  c.dataset.slot_minutes = required<int>(j, "slot_minutes", "");
  c.dataset.max_laxity = required<int>(j, "max_laxity", "");
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j.at("seed"), "seed");
  if (j.contains("start_date")) c.start_date = get_as<std::string>(j.at("start_date"), "start_date");
  if (j.contains("price")) {
    const json& p = j.at("price");
    c.price.hourly_mean = parse_hourly(field(p, "hourly_mean", "price."), "price.hourly_mean");
    c.price.noise = required<double>(p, "noise", "price.");
  }
  const json& profiles = field(j, "profiles", "");
  if (!profiles.is_array()) throw DataError("config: field 'profiles' must be an array");
  c.profiles.clear();
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    const std::string path = "profiles[" + std::to_string(k) + "]";
    const json& pj = profiles[k];
    CategoryProfile p;
    try {
      p.category = parse_category(required<std::string>(pj, "category", path + "."));
    } catch (const InvalidArgument& e) {
      throw DataError("config: " + path + ".category: " + e.what());
    }
    p.hourly_rates = parse_hourly(field(pj, "hourly_rates", path + "."), path + ".hourly_rates");
    p.demand = parse_triangular(field(pj, "demand", path + "."), path + ".demand");
    p.parking = parse_triangular(field(pj, "parking", path + "."), path + ".parking");
    try {
      p.validate();
    } catch (const InvalidArgument& e) {
      throw DataError("config: " + path + ": " + e.what());
    }
    c.profiles.push_back(p);
  }
  return c;
}

GenerateConfig load_generate_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  try {
    return parse_generate_config(json::parse(in));
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<fs::path> cmd_generate(const GenerateConfig& config, const fs::path& out_dir) {
  if (config.days == 0) return {};
  fs::create_directories(out_dir);
  DatasetInfo info = config.dataset;
  info.config_hash = fnv1a_hex(to_json(config).dump());
  write_dataset_info(out_dir, info);
  DayOptions opts;
  opts.horizon = config.dataset.horizon;
  opts.slot_minutes = config.dataset.slot_minutes;
  opts.max_laxity = config.dataset.max_laxity;
  const int hours = (config.dataset.horizon * config.dataset.slot_minutes + 59) / 60;
  std::vector<fs::path> written;
  for (int k = 0; k < config.days; ++k) {
    const std::string name = day_name(k);
    auto prices = gen_hourly_prices(config.price, day_seed(config.seed, k, 1));
    while (static_cast<int>(prices.size()) < hours) prices.push_back(prices.back());
    const auto arrivals = gen_day(config.profiles, day_seed(config.seed, k, 0), opts);
    const fs::path price_file = out_dir / (name + "_prices.csv");
    const fs::path arrival_file = out_dir / (name + "_arrivals.csv");
    write_prices(price_file, prices, add_days(config.start_date, k));
    write_arrivals(arrival_file, arrivals);
    written.push_back(price_file);
    written.push_back(arrival_file);
  }
  return written;
}

TrainConfig default_pg_config() {
  TrainConfig c;
  c.step_size = 0.05;
  c.iterations = 1500;
  c.rollouts = 4;
  c.sigma = 1.5;
  c.normalization = ReturnNormalization::PerTimeStep;
  return c;
}

QeTrainConfig default_qe_config() {
  QeTrainConfig c;
  c.step_size = 0.01;
  c.iterations = 300;
  return c;
}

TrainOutput cmd_train(const fs::path& data_dir, const TrainOptions& options, const fs::path& model_path) {
  const DatasetInfo info = load_dataset_info(data_dir);
  const auto days = load_days_checked(data_dir, info);
  const auto episodes = episodes_of(days);

  TrainOutput out;
  Model& model = out.model;
  model.algo = options.algo;
  model.max_laxity = info.max_laxity;

  json hyper;
  hyper["algo"] = to_string(options.algo);
  hyper["seed"] = options.seed;
  hyper["dataset"] = {{"horizon", info.horizon}, {"slot_minutes", info.slot_minutes}, {"max_laxity", info.max_laxity},
                      {"config_hash", info.config_hash}};
  json names = json::array();
  for (const auto& d : days) names.push_back(d.name);
  hyper["days"] = names;

  std::ofstream curve;
  out.curve_path = model_path;
  out.curve_path.replace_filename(model_path.stem().string() + "_curve.csv");

  if (options.algo == Algorithm::PolicyGradient) {
    TrainConfig cfg = default_pg_config();
    if (options.iterations) cfg.iterations = *options.iterations;
    if (options.alpha) cfg.step_size = *options.alpha;
    if (options.sigma) cfg.sigma = *options.sigma;
    cfg.seed = options.seed;
    const int lmax = options.lmax.value_or(info.max_laxity);
    if (lmax < 1 || lmax > info.max_laxity) throw InvalidArgument("lmax must lie in [1, max laxity]");

    model.features.max_laxity = info.max_laxity;
    model.features.lmax = lmax;
    model.features.fit(episodes);
    const auto initial = PolicyParamsd::zeros(model.features.dim(), cfg.sigma);
    const TrainResult result = train(episodes, initial, cfg, model.features.mapper());
    model.params = result.params;
    out.curve = result.curve;

    hyper["lmax"] = lmax;
    hyper["iterations"] = cfg.iterations;
    hyper["alpha"] = cfg.step_size;
    hyper["sigma"] = cfg.sigma;
    hyper["sigma_decay"] = cfg.sigma_decay;
    hyper["sigma_min"] = cfg.sigma_min;
    hyper["rollouts"] = cfg.rollouts;
    hyper["normalization"] = to_string(cfg.normalization);
    hyper["discount"] = cfg.discount;
    model.training = {{"iterations_run", result.iterations}, {"converged", result.converged}};

    fs::create_directories(out.curve_path.parent_path().empty() ? fs::path(".") : out.curve_path.parent_path());
    curve.open(out.curve_path, std::ios::binary);
    if (!curve) throw DataError("cannot write " + out.curve_path.string());
    curve << "iteration,reward,sigma,w_price";
    for (int l = 0; l <= lmax; ++l) curve << ",w_n" << l;
    curve << ",bias\n";
    for (std::size_t it = 0; it < result.curve.size(); ++it) {
      curve << it << ',' << fmt(result.curve[it]) << ',' << fmt(result.sigmas[it]);
      for (Eigen::Index k = 0; k < result.trace[it].size(); ++k) curve << ',' << fmt(result.trace[it][k], 9);
      curve << '\n';
    }
  } else {
    QeTrainConfig cfg = default_qe_config();
    if (options.iterations) cfg.iterations = *options.iterations;
    if (options.alpha) cfg.step_size = *options.alpha;
    cfg.seed = options.seed;
    const QeTrainResult result = qe_train(episodes, info.max_laxity, cfg);
    model.theta = result.theta;
    model.qe_features = cfg.features;
    model.reward_scale = result.reward_scale;
    out.curve = result.curve;

    hyper["iterations"] = cfg.iterations;
    hyper["alpha"] = cfg.step_size;
    hyper["epsilon"] = {cfg.epsilon_start, cfg.epsilon_end};
    hyper["discount"] = cfg.discount;
    model.training = {{"iterations_run", result.iterations}};

    fs::create_directories(out.curve_path.parent_path().empty() ? fs::path(".") : out.curve_path.parent_path());
    curve.open(out.curve_path, std::ios::binary);
    if (!curve) throw DataError("cannot write " + out.curve_path.string());
    curve << "iteration,reward,theta_cost,theta_deadline,theta_saturation,theta_congestion\n";
    for (std::size_t it = 0; it < result.curve.size(); ++it) {
      curve << it << ',' << fmt(result.curve[it]);
      for (Eigen::Index k = 0; k < 4; ++k) curve << ',' << fmt(result.trace[it][k], 9);
      curve << '\n';
    }
  }
  model.training["hyperparameters"] = hyper;
  model.config_hash = fnv1a_hex(hyper.dump());
  save_model(model, model_path);
  out.model_path = model_path;
  return out;
}

EvalTable evaluate_model(const Model& model, const std::vector<DayData>& days) {
  EvalTable table;
  double sum = 0.0;
  for (const auto& d : days) {
    const double r = model.evaluate(d.episode);
    table.rows.push_back({d.name, r});
    sum += r;
  }
  table.average = days.empty() ? 0.0 : sum / static_cast<double>(days.size());
  return table;
}

EvalTable cmd_eval(const fs::path& model_path, const fs::path& data_dir) {
  const Model model = load_model(model_path);
  const DatasetInfo info = load_dataset_info(data_dir);
  check_compatible(model, info);
  return evaluate_model(model, load_days_checked(data_dir, info));
}

void write_eval(std::ostream& out, const EvalTable& table) {
  out << "day,reward\n";
  for (const auto& r : table.rows) out << r.day << ',' << fmt(r.reward) << '\n';
  out << "average," << fmt(table.average) << '\n';
}

double percent_improvement(double reward_a, double reward_b) {
  if (reward_b == 0.0) {
    if (reward_a == 0.0) return 0.0;
    throw NumericalError("percentage improvement over a zero reward is undefined");
  }
  return (reward_a - reward_b) / std::abs(reward_b) * 100.0;
}

CompareTable compare_models(const Model& a, const Model& b, const std::vector<DayData>& days) {
  CompareTable table;
  for (const auto& d : days) {
    ActionSeries series;
    series.day = d.name;
    series.prices.assign(d.episode.prices.begin(), d.episode.prices.begin() + d.episode.horizon);
    CompareRow row;
    row.day = d.name;
    row.reward_a = a.evaluate(d.episode, &series.actions_a);
    row.reward_b = b.evaluate(d.episode, &series.actions_b);
    row.improvement = percent_improvement(row.reward_a, row.reward_b);
    table.average_a += row.reward_a;
    table.average_b += row.reward_b;
    table.rows.push_back(row);
    table.series.push_back(std::move(series));
  }
  if (!days.empty()) {
    table.average_a /= static_cast<double>(days.size());
    table.average_b /= static_cast<double>(days.size());
  }
  table.average_improvement = percent_improvement(table.average_a, table.average_b);
  return table;
}

CompareTable cmd_compare(const fs::path& model_a, const fs::path& model_b, const fs::path& data_dir) {
  const Model a = load_model(model_a);
  const Model b = load_model(model_b);
  const DatasetInfo info = load_dataset_info(data_dir);
  check_compatible(a, info);
  check_compatible(b, info);
  return compare_models(a, b, load_days_checked(data_dir, info));
}

void write_compare(std::ostream& out, const CompareTable& table) {
  out << "day,reward_a,reward_b,improvement_pct\n";
  for (const auto& r : table.rows) {
    out << r.day << ',' << fmt(r.reward_a) << ',' << fmt(r.reward_b) << ',' << fmt(r.improvement, 4) << '\n';
  }
  out << "average," << fmt(table.average_a) << ',' << fmt(table.average_b) << ',' << fmt(table.average_improvement, 4)
      << '\n';
}

void write_action_series(std::ostream& out, const CompareTable& table) {
  out << "day,slot,price,action_a,action_b\n";
  for (const auto& s : table.series) {
    for (std::size_t t = 0; t < s.actions_a.size(); ++t) {
      out << s.day << ',' << t << ',' << fmt(s.prices[t], 4) << ',' << s.actions_a[t] << ',' << s.actions_b[t] << '\n';
    }
  }
}

}  // namespace evcs
