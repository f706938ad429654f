#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evcs/env.hpp"

namespace evcs {

/// Prices on the simulation slot grid.
struct PriceSeries {
  int slot_minutes = 15;
  std::vector<double> values;
};

enum class Resampling { StepHold, Linear };

struct PriceLoadOptions {
  int slot_minutes = 15;
  Resampling resampling = Resampling::StepHold;
  /// When set, the series must cover at least this many slots.
  std::optional<int> horizon;
};

/// Reads `timestamp,price` rows (hourly, "YYYY-MM-DD HH:MM[:SS]") and resamples
/// every hour onto `60 / slot_minutes` slots. Throws DataError naming the line
/// or the missing timestamp.
PriceSeries load_prices(const std::filesystem::path& path, const PriceLoadOptions& options = {});
PriceSeries resample_hourly(std::span<const double> hourly, const PriceLoadOptions& options);

void write_prices(const std::filesystem::path& path, std::span<const double> hourly, const std::string& date);

/// Reads `slot,demand,parking,category` rows.
std::vector<ArrivalEvent> load_arrivals(const std::filesystem::path& path);
void write_arrivals(const std::filesystem::path& path, std::span<const ArrivalEvent> arrivals);

/// Integer triangular distribution on [min, max] with peak at mode.
struct Triangular {
  int min = 1;
  int max = 1;
  int mode = 1;
};

struct CategoryProfile {
  EvCategory category = EvCategory::Normal;
  std::array<double, 24> hourly_rates{};
  Triangular demand;
  Triangular parking;

  void validate() const;
};

struct DayOptions {
  int horizon = 96;
  int slot_minutes = 15;
  int max_laxity = 12;
};

/// Poisson arrivals per hour, uniform slot inside the hour, (demand, parking)
/// resampled until the laxity lies in [0, max_laxity]. Parking is cut at the
/// end of the day (demand is cut to match). Sorted by slot.
std::vector<ArrivalEvent> gen_day(std::span<const CategoryProfile> profiles, std::uint64_t seed,
                                  const DayOptions& options = {});

/// Emergent mid-day, normal commuter daytime, residential evening.
std::vector<CategoryProfile> default_profiles();

struct PriceProfile {
  std::array<double, 24> hourly_mean{};
  double noise = 0.1;  // relative, per hour
};

PriceProfile default_price_profile();
std::vector<double> gen_hourly_prices(const PriceProfile& profile, std::uint64_t seed);

/// Builds a validated episode: the first horizon+1 prices (the last slot is
/// repeated when the series is exactly horizon long).
EpisodeConfig make_episode(const PriceSeries& prices, std::vector<ArrivalEvent> arrivals, int horizon,
                           double discount = 1.0);

struct DayData {
  std::string name;
  EpisodeConfig episode;
};

struct DatasetInfo {
  int horizon = 96;
  int slot_minutes = 15;
  int max_laxity = 12;
  std::string config_hash;  // of the generating config, empty for hand-made data
};

/// Reads `dataset.json` if present, defaults otherwise.
DatasetInfo load_dataset_info(const std::filesystem::path& dir);
void write_dataset_info(const std::filesystem::path& dir, const DatasetInfo& info);

/// Loads every `<name>_prices.csv` / `<name>_arrivals.csv` pair, sorted by name.
std::vector<DayData> load_day_dir(const std::filesystem::path& dir, const DatasetInfo& info);

}  // namespace evcs
