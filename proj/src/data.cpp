#include "evcs/data.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "evcs/error.hpp"

namespace evcs {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string where(const fs::path& path, std::size_t line) { return path.string() + ":" + std::to_string(line) + ": "; }

template <typename T>
bool parse_number(const std::string& s, T& out) {
  if constexpr (std::is_floating_point_v<T>) {
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return !s.empty() && end == s.c_str() + s.size() && std::isfinite(out);
  } else {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
  }
}

std::ifstream open_or_throw(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

// Minutes since 1970-01-01 for "YYYY-MM-DD[ T]HH:MM[:SS]".
std::optional<long long> parse_timestamp(const std::string& s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  char sep = 0;
  const int n = std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &sec);
  if (n < 6 || (sep != ' ' && sep != 'T')) return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59) return std::nullopt;
  const auto days_since_epoch = sys_days{ymd}.time_since_epoch().count();
  return static_cast<long long>(days_since_epoch) * 1440 + h * 60 + mi;
}

std::string format_timestamp(long long minutes) {
  using namespace std::chrono;
  const long long days_count = minutes >= 0 ? minutes / 1440 : (minutes - 1439) / 1440;
  const year_month_day ymd{sys_days{days{days_count}}};
  const long long rem = minutes - days_count * 1440;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02lld:%02lld", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), rem / 60, rem % 60);
  return buf;
}

int sample_triangular(const Triangular& tri, std::mt19937_64& rng) {
  if (tri.min == tri.max) return tri.min;
  const double a = tri.min - 0.5;
  const double b = tri.max + 0.5;
  const double c = std::clamp(static_cast<double>(tri.mode), a, b);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  const double split = (c - a) / (b - a);
  const double x = u < split ? a + std::sqrt(u * (b - a) * (c - a)) : b - std::sqrt((1.0 - u) * (b - a) * (b - c));
  return std::clamp(static_cast<int>(std::lround(x)), tri.min, tri.max);
}

}  // namespace

PriceSeries resample_hourly(std::span<const double> hourly, const PriceLoadOptions& options) {
  if (options.slot_minutes <= 0 || 60 % options.slot_minutes != 0) {
    throw InvalidArgument("slot length must divide one hour");
  }
  const int per_hour = 60 / options.slot_minutes;
  PriceSeries out;
  out.slot_minutes = options.slot_minutes;
  out.values.reserve(hourly.size() * static_cast<std::size_t>(per_hour));
  for (std::size_t h = 0; h < hourly.size(); ++h) {
    for (int k = 0; k < per_hour; ++k) {
      if (options.resampling == Resampling::Linear && h + 1 < hourly.size()) {
        const double w = static_cast<double>(k) / per_hour;
        out.values.push_back((1.0 - w) * hourly[h] + w * hourly[h + 1]);
      } else {
        out.values.push_back(hourly[h]);
      }
    }
  }
  if (options.horizon && static_cast<int>(out.values.size()) < *options.horizon) {
    throw DataError("price series covers " + std::to_string(out.values.size()) + " slots, need " +
                    std::to_string(*options.horizon));
  }
  return out;
}

PriceSeries load_prices(const fs::path& path, const PriceLoadOptions& options) {
  auto in = open_or_throw(path);
  std::string line;
  std::size_t lineno = 0;
  std::vector<double> hourly;
  std::optional<long long> previous;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (!header_seen) {
      header_seen = true;
      if (cells.size() < 2 || cells[0] != "timestamp" || cells[1] != "price") {
        throw DataError(where(path, lineno) + "expected header 'timestamp,price'");
      }
      continue;
    }
    if (cells.size() != 2) throw DataError(where(path, lineno) + "expected 2 columns");
    const auto ts = parse_timestamp(cells[0]);
    if (!ts) throw DataError(where(path, lineno) + "unparseable timestamp '" + cells[0] + "'");
    double price = 0.0;
    if (!parse_number(cells[1], price)) throw DataError(where(path, lineno) + "unparseable price '" + cells[1] + "'");
    if (previous) {
      if (*ts <= *previous) throw DataError(where(path, lineno) + "timestamps out of order at " + cells[0]);
      if (*ts != *previous + 60) {
        throw DataError(where(path, lineno) + "missing timestamp " + format_timestamp(*previous + 60));
      }
    }
    previous = ts;
    hourly.push_back(price);
  }
  if (!header_seen) throw DataError(path.string() + ": empty price file");
  return resample_hourly(hourly, options);
}

void write_prices(const fs::path& path, std::span<const double> hourly, const std::string& date) {
  const auto start = parse_timestamp(date + " 00:00");
  if (!start) throw InvalidArgument("bad date '" + date + "'");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "timestamp,price\n";
  char buf[64];
  for (std::size_t h = 0; h < hourly.size(); ++h) {
    std::snprintf(buf, sizeof buf, "%.4f", hourly[h]);
    out << format_timestamp(*start + 60 * static_cast<long long>(h)) << ',' << buf << '\n';
  }
}

std::vector<ArrivalEvent> load_arrivals(const fs::path& path) {
  auto in = open_or_throw(path);
  std::string line;
  std::size_t lineno = 0;
  std::vector<ArrivalEvent> events;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (!header_seen) {
      header_seen = true;
      if (cells != std::vector<std::string>{"slot", "demand", "parking", "category"}) {
        throw DataError(where(path, lineno) + "expected header 'slot,demand,parking,category'");
      }
      continue;
    }
    if (cells.size() != 4) throw DataError(where(path, lineno) + "expected 4 columns");
    ArrivalEvent ev;
    if (!parse_number(cells[0], ev.t) || ev.t < 0) throw DataError(where(path, lineno) + "bad slot '" + cells[0] + "'");
    if (!parse_number(cells[1], ev.demand) || ev.demand <= 0) {
      throw DataError(where(path, lineno) + "bad demand '" + cells[1] + "'");
    }
    if (!parse_number(cells[2], ev.parking) || ev.parking <= 0) {
      throw DataError(where(path, lineno) + "bad parking '" + cells[2] + "'");
    }
    if (ev.demand > ev.parking) {
      throw DataError(where(path, lineno) + "row " + std::to_string(events.size() + 1) + " has demand " +
                      cells[1] + " > parking " + cells[2]);
    }
    try {
      ev.category = parse_category(cells[3]);
    } catch (const InvalidArgument& e) {
      throw DataError(where(path, lineno) + e.what());
    }
    events.push_back(ev);
  }
  return events;
}

void write_arrivals(const fs::path& path, std::span<const ArrivalEvent> arrivals) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "slot,demand,parking,category\n";
  for (const auto& a : arrivals) out << a.t << ',' << a.demand << ',' << a.parking << ',' << to_string(a.category) << '\n';
}

void CategoryProfile::validate() const {
  for (const Triangular* tri : {&demand, &parking}) {
    if (tri->min < 1 || tri->min > tri->max || tri->mode < tri->min || tri->mode > tri->max) {
      throw InvalidArgument("triangular parameters need 1 <= min <= mode <= max");
    }
  }
  if (demand.min > parking.max) throw InvalidArgument("demand support lies above parking support");
  for (double r : hourly_rates) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidArgument("hourly rates must be finite and non-negative");
  }
}

std::vector<ArrivalEvent> gen_day(std::span<const CategoryProfile> profiles, std::uint64_t seed,
                                  const DayOptions& options) {
  if (options.slot_minutes <= 0 || 60 % options.slot_minutes != 0) {
    throw InvalidArgument("slot length must divide one hour");
  }
  const int per_hour = 60 / options.slot_minutes;
  std::mt19937_64 rng(seed);
  std::vector<ArrivalEvent> out;
  for (const auto& profile : profiles) {
    profile.validate();
    for (int h = 0; h < 24; ++h) {
      const double rate = profile.hourly_rates[static_cast<std::size_t>(h)];
      if (rate <= 0.0) continue;
      std::poisson_distribution<int> count(rate);
      const int n = count(rng);
      for (int k = 0; k < n; ++k) {
        std::uniform_int_distribution<int> offset(0, per_hour - 1);
        ArrivalEvent ev;
        ev.category = profile.category;
        ev.t = h * per_hour + offset(rng);
        int tries = 0;
        do {
          if (++tries > 10000) throw InvalidArgument("profile cannot produce laxity within [0, max_laxity]");
          ev.demand = sample_triangular(profile.demand, rng);
          ev.parking = sample_triangular(profile.parking, rng);
        } while (ev.parking < ev.demand || ev.parking - ev.demand > options.max_laxity);
        if (ev.t >= options.horizon) continue;
        ev.parking = std::min(ev.parking, options.horizon - ev.t);
        ev.demand = std::min(ev.demand, ev.parking);
        out.push_back(ev);
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const ArrivalEvent& a, const ArrivalEvent& b) { return a.t < b.t; });
  return out;
}

std::vector<CategoryProfile> default_profiles() {
  CategoryProfile emergent;
  emergent.category = EvCategory::Emergent;
  emergent.hourly_rates = {0, 0, 0, 0, 0, 0, 0.2, 0.4, 0.6, 0.8, 1.2, 1.5, 1.6, 1.5, 1.2, 0.9, 0.7, 0.5, 0.4, 0.3, 0.2, 0.1, 0, 0};
  emergent.demand = {1, 6, 2};
  emergent.parking = {1, 8, 3};

  CategoryProfile normal;
  normal.category = EvCategory::Normal;
  normal.hourly_rates = {0, 0, 0, 0, 0, 0.2, 0.8, 2.0, 3.0, 2.5, 1.5, 1.0, 1.0, 0.8, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0, 0, 0, 0};
  normal.demand = {4, 16, 8};
  normal.parking = {6, 26, 14};

  CategoryProfile residential;
  residential.category = EvCategory::Residential;
  residential.hourly_rates = {0.1, 0, 0, 0, 0, 0, 0.1, 0.2, 0.2, 0.2, 0.2, 0.3, 0.3, 0.4, 0.6, 0.9, 1.5, 2.2, 2.5, 2.0, 1.4, 0.8, 0.4, 0.2};
  residential.demand = {6, 20, 12};
  residential.parking = {8, 30, 18};

  return {emergent, normal, residential};
}

PriceProfile default_price_profile() {
  PriceProfile p;
  p.hourly_mean = {22, 20, 19, 18, 19, 22, 28, 34, 36, 35, 34, 35, 38, 42, 50, 62, 85, 110, 95, 60, 45, 36, 30, 25};
  p.noise = 0.12;
  return p;
}

std::vector<double> gen_hourly_prices(const PriceProfile& profile, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> out;
  out.reserve(24);
  for (double mean : profile.hourly_mean) out.push_back(std::max(1.0, mean * (1.0 + profile.noise * z(rng))));
  return out;
}

EpisodeConfig make_episode(const PriceSeries& prices, std::vector<ArrivalEvent> arrivals, int horizon, double discount) {
  if (static_cast<int>(prices.values.size()) < horizon || prices.values.empty()) {
    throw DataError("price series covers " + std::to_string(prices.values.size()) + " slots, need " +
                    std::to_string(horizon));
  }
  EpisodeConfig cfg;
  cfg.horizon = horizon;
  cfg.discount = discount;
  cfg.prices.assign(prices.values.begin(), prices.values.begin() + std::min<std::size_t>(prices.values.size(), horizon + 1));
  if (static_cast<int>(cfg.prices.size()) == horizon) cfg.prices.push_back(cfg.prices.back());
  cfg.arrivals = std::move(arrivals);
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw DataError(e.what());
  }
  return cfg;
}

DatasetInfo load_dataset_info(const fs::path& dir) {
  DatasetInfo info;
  const fs::path file = dir / "dataset.json";
  if (!fs::exists(file)) return info;
  try {
    std::ifstream in(file);
    const auto j = nlohmann::json::parse(in);
    info.horizon = j.value("horizon", info.horizon);
    info.slot_minutes = j.value("slot_minutes", info.slot_minutes);
    info.max_laxity = j.value("max_laxity", info.max_laxity);
    info.config_hash = j.value("config_hash", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(file.string() + ": " + e.what());
  }
  return info;
}

void write_dataset_info(const fs::path& dir, const DatasetInfo& info) {
  nlohmann::json j{{"horizon", info.horizon}, {"slot_minutes", info.slot_minutes}, {"max_laxity", info.max_laxity}};
  if (!info.config_hash.empty()) j["config_hash"] = info.config_hash;
  std::ofstream out(dir / "dataset.json");
  if (!out) throw DataError("cannot write " + (dir / "dataset.json").string());
  out << j.dump(2) << '\n';
}

std::vector<DayData> load_day_dir(const fs::path& dir, const DatasetInfo& info) {
  if (!fs::is_directory(dir)) throw DataError("no such data directory: " + dir.string());
  const std::string suffix = "_prices.csv";
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string file = entry.path().filename().string();
    if (file.size() > suffix.size() && file.ends_with(suffix)) names.push_back(file.substr(0, file.size() - suffix.size()));
  }
  std::sort(names.begin(), names.end());
  std::vector<DayData> days;
  PriceLoadOptions opts;
  opts.slot_minutes = info.slot_minutes;
  opts.horizon = info.horizon;
  for (const auto& name : names) {
    const fs::path arrivals = dir / (name + "_arrivals.csv");
    if (!fs::exists(arrivals)) throw DataError("missing " + arrivals.string());
    DayData d;
    d.name = name;
    d.episode = make_episode(load_prices(dir / (name + suffix), opts), load_arrivals(arrivals), info.horizon);
    days.push_back(std::move(d));
  }
  return days;
}

}  // namespace evcs
