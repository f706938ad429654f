// evcs: generate synthetic days, train pg/qe policies, evaluate and compare them.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.
// EVCS_OUT_DIR, when set, is prepended to relative output paths.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "evcs/commands.hpp"
#include "evcs/error.hpp"

namespace {

namespace fs = std::filesystem;

fs::path output_path(const std::string& p) {
  fs::path path(p);
  if (const char* dir = std::getenv("EVCS_OUT_DIR"); dir && *dir && path.is_relative()) return fs::path(dir) / path;
  return path;
}

void emit(const std::string& out, const std::function<void(std::ostream&)>& write) {
  if (out.empty()) {
    write(std::cout);
    return;
  }
  const fs::path path = output_path(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary);
  if (!file) throw evcs::DataError("cannot write " + path.string());
  write(file);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EV charging station operation: LLF action reduction, laxity aggregation, policy gradient"};
  app.require_subcommand(1);

  std::string config_path, out, data, algo = "pg", actions_out;
  std::uint64_t seed = 1;
  int iterations = 0, lmax = 0;
  double alpha = 0.0, sigma = 0.0;

  auto* generate = app.add_subcommand("generate", "Write synthetic price/arrival day files");
  generate->add_option("--config", config_path, "Experiment config (JSON); built-in defaults when omitted");
  auto* gen_seed = generate->add_option("--seed", seed, "Override the config seed");
  generate->add_option("--out", out, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train a policy on every day in a data directory");
  train->add_option("--data", data, "Data directory")->required();
  train->add_option("--algo", algo, "pg or qe")->check(CLI::IsMember({"pg", "qe"}));
  train->add_option("--out", out, "Model file")->required();
  train->add_option("--seed", seed, "RNG seed");
  auto* it_opt = train->add_option("--iterations", iterations, "Training iterations")->check(CLI::NonNegativeNumber);
  auto* alpha_opt = train->add_option("--alpha", alpha, "Step size")->check(CLI::NonNegativeNumber);
  auto* sigma_opt = train->add_option("--sigma", sigma, "Initial exploration std-dev (pg)")->check(CLI::PositiveNumber);
  auto* lmax_opt = train->add_option("--lmax", lmax, "Merge laxity levels >= lmax (pg)")->check(CLI::PositiveNumber);

  std::string model_a, model_b;
  auto* eval = app.add_subcommand("eval", "Per-day deterministic evaluation of a model");
  eval->add_option("model", model_a, "Model file")->required();
  eval->add_option("--data", data, "Data directory")->required();
  eval->add_option("--out", out, "Write the table here instead of stdout");

  auto* compare = app.add_subcommand("compare", "Per-day rewards of two models and the improvement of A over B");
  compare->add_option("model_a", model_a, "Model A")->required();
  compare->add_option("model_b", model_b, "Model B")->required();
  compare->add_option("--data", data, "Data directory")->required();
  compare->add_option("--out", out, "Write the table here instead of stdout");
  compare->add_option("--actions", actions_out, "Per-slot total actions of both models with prices");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*generate) {
      auto cfg = config_path.empty() ? evcs::default_generate_config() : evcs::load_generate_config(config_path);
      if (*gen_seed) cfg.seed = seed;
      const auto files = evcs::cmd_generate(cfg, output_path(out));
      std::cout << "wrote " << files.size() / 2 << " days to " << output_path(out).string() << '\n';
    } else if (*train) {
      evcs::TrainOptions opts;
      opts.algo = evcs::parse_algorithm(algo);
      opts.seed = seed;
      if (*it_opt) opts.iterations = iterations;
      if (*alpha_opt) opts.alpha = alpha;
      if (*sigma_opt) opts.sigma = sigma;
      if (*lmax_opt) opts.lmax = lmax;
      const fs::path model_path = output_path(out);
      if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());
      const auto result = evcs::cmd_train(data, opts, model_path);
      std::cout << "model " << result.model_path.string() << "\ncurve " << result.curve_path.string() << '\n';
    } else if (*eval) {
      const auto table = evcs::cmd_eval(model_a, data);
      emit(out, [&](std::ostream& os) { evcs::write_eval(os, table); });
    } else if (*compare) {
      const auto table = evcs::cmd_compare(model_a, model_b, data);
      emit(out, [&](std::ostream& os) { evcs::write_compare(os, table); });
      if (!actions_out.empty()) emit(actions_out, [&](std::ostream& os) { evcs::write_action_series(os, table); });
    }
  } catch (const evcs::NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const evcs::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
