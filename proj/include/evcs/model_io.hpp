#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "evcs/baseline.hpp"
#include "evcs/policy.hpp"
#include "evcs/training.hpp"

namespace evcs {

enum class Algorithm { PolicyGradient, QEstimate };

std::string to_string(Algorithm algo);
Algorithm parse_algorithm(const std::string& name);

/// A trained policy of either kind plus everything needed to replay it.
struct Model {
  Algorithm algo = Algorithm::PolicyGradient;
  int max_laxity = 12;

  // pg
  FeatureMap features;
  PolicyParamsd params;

  // qe
  QeFeatures theta = QeFeatures::Zero();
  QeFeatureConfig qe_features;
  double reward_scale = 1.0;

  std::string config_hash;
  nlohmann::json training = nlohmann::json::object();

  /// Mean-action (pg) or greedy (qe) rollout.
  double evaluate(const EpisodeConfig& day, std::vector<int>* actions = nullptr) const;
};

nlohmann::json to_json(const Model& model);
Model model_from_json(const nlohmann::json& j);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

/// 64-bit FNV-1a, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace evcs
