#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evcs/data.hpp"
#include "evcs/model_io.hpp"

namespace evcs {

namespace fs = std::filesystem;

// ---- generate -------------------------------------------------------------

struct GenerateConfig {
  int days = 20;
  std::uint64_t seed = 7;
  std::string start_date = "2021-07-01";
  DatasetInfo dataset;
  std::vector<CategoryProfile> profiles;
  PriceProfile price;
};

GenerateConfig default_generate_config();
nlohmann::json to_json(const GenerateConfig& config);
/// Throws DataError naming the offending field, e.g. "profiles[1].demand.mode".
GenerateConfig parse_generate_config(const nlohmann::json& j);
GenerateConfig load_generate_config(const fs::path& path);

/// Writes `day_NNN_prices.csv` / `day_NNN_arrivals.csv` pairs plus `dataset.json`.
/// Returns the written day files.
std::vector<fs::path> cmd_generate(const GenerateConfig& config, const fs::path& out_dir);

// ---- train ----------------------------------------------------------------

struct TrainOptions {
  Algorithm algo = Algorithm::PolicyGradient;
  std::optional<int> iterations;
  std::optional<double> alpha;
  std::optional<double> sigma;
  std::optional<int> lmax;
  std::uint64_t seed = 1;
};

/// Hyperparameters the CLI uses when a flag is not given.
TrainConfig default_pg_config();
QeTrainConfig default_qe_config();

struct TrainOutput {
  Model model;
  fs::path model_path;
  fs::path curve_path;
  std::vector<double> curve;
};

/// Trains on every day in `data_dir`; writes the model and `<stem>_curve.csv`
/// (per-iteration reward and parameter trace) next to it.
TrainOutput cmd_train(const fs::path& data_dir, const TrainOptions& options, const fs::path& model_path);

// ---- eval / compare -------------------------------------------------------

struct EvalRow {
  std::string day;
  double reward = 0.0;
};

struct EvalTable {
  std::vector<EvalRow> rows;
  double average = 0.0;
};

EvalTable cmd_eval(const fs::path& model_path, const fs::path& data_dir);
EvalTable evaluate_model(const Model& model, const std::vector<DayData>& days);
void write_eval(std::ostream& out, const EvalTable& table);

/// (reward_a - reward_b) / |reward_b| * 100.
double percent_improvement(double reward_a, double reward_b);

struct CompareRow {
  std::string day;
  double reward_a = 0.0;
  double reward_b = 0.0;
  double improvement = 0.0;
};

struct ActionSeries {
  std::string day;
  std::vector<double> prices;
  std::vector<int> actions_a;
  std::vector<int> actions_b;
};

struct CompareTable {
  std::vector<CompareRow> rows;
  double average_a = 0.0;
  double average_b = 0.0;
  double average_improvement = 0.0;  // improvement of the averages
  std::vector<ActionSeries> series;
};

CompareTable cmd_compare(const fs::path& model_a, const fs::path& model_b, const fs::path& data_dir);
CompareTable compare_models(const Model& a, const Model& b, const std::vector<DayData>& days);
void write_compare(std::ostream& out, const CompareTable& table);
/// day,slot,price,action_a,action_b
void write_action_series(std::ostream& out, const CompareTable& table);

}  // namespace evcs
