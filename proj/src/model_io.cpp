#include "evcs/model_io.hpp"

#include <cstdio>
#include <fstream>

#include "evcs/error.hpp"

namespace evcs {

using nlohmann::json;

std::string to_string(Algorithm algo) { return algo == Algorithm::PolicyGradient ? "pg" : "qe"; }

Algorithm parse_algorithm(const std::string& name) {
  if (name == "pg") return Algorithm::PolicyGradient;
  if (name == "qe") return Algorithm::QEstimate;
  throw InvalidArgument("unknown algorithm '" + name + "' (expected pg or qe)");
}

double Model::evaluate(const EpisodeConfig& day, std::vector<int>* actions) const {
  if (algo == Algorithm::PolicyGradient) return evaluate_policy(day, params, features.mapper(), actions);
  return evaluate_qe(day, theta, max_laxity, qe_features, actions);
}

namespace {

json to_array(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd from_array(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

json to_json(const Model& model) {
  json j;
  j["format"] = "evcs-model";
  j["version"] = 1;
  j["algo"] = to_string(model.algo);
  j["max_laxity"] = model.max_laxity;
  j["config_hash"] = model.config_hash;
  j["training"] = model.training;
  if (model.algo == Algorithm::PolicyGradient) {
    j["lmax"] = model.features.lmax;
    j["weights"] = to_array(model.params.weights);
    j["bias"] = model.params.bias;
    j["sigma"] = model.params.sigma;
    j["feature_mean"] = to_array(model.features.mean);
    j["feature_scale"] = to_array(model.features.scale);
  } else {
    j["theta"] = to_array(model.theta);
    j["reward_scale"] = model.reward_scale;
    j["qe_features"] = {{"price_window", model.qe_features.price_window},
                        {"capacity", model.qe_features.capacity},
                        {"congestion_fraction", model.qe_features.congestion_fraction}};
  }
  return j;
}

Model model_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "evcs-model") throw DataError("not an evcs model file");
    if (j.at("version").get<int>() != 1) throw DataError("unsupported model version " + j.at("version").dump());
    Model m;
    m.algo = parse_algorithm(j.at("algo").get<std::string>());
    m.max_laxity = j.at("max_laxity").get<int>();
    m.config_hash = j.value("config_hash", "");
    m.training = j.value("training", json::object());
    if (m.algo == Algorithm::PolicyGradient) {
      m.features.max_laxity = m.max_laxity;
      m.features.lmax = j.at("lmax").get<int>();
      m.features.mean = from_array(j.at("feature_mean"));
      m.features.scale = from_array(j.at("feature_scale"));
      m.params.weights = from_array(j.at("weights"));
      m.params.bias = j.at("bias").get<double>();
      m.params.sigma = j.at("sigma").get<double>();
      if (m.params.dim() != m.features.dim()) throw DataError("model weights do not match its feature dimension");
      if (m.features.mean.size() != 0 &&
          (m.features.mean.size() != m.features.dim() || m.features.scale.size() != m.features.dim())) {
        throw DataError("model standardization constants have the wrong length");
      }
    } else {
      const Eigen::VectorXd theta = from_array(j.at("theta"));
      if (theta.size() != 4) throw DataError("qe model needs 4 coefficients");
      m.theta = theta;
      m.reward_scale = j.at("reward_scale").get<double>();
      const auto& f = j.at("qe_features");
      m.qe_features.price_window = f.at("price_window").get<int>();
      m.qe_features.capacity = f.at("capacity").get<int>();
      m.qe_features.congestion_fraction = f.at("congestion_fraction").get<double>();
    }
    return m;
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("bad model: ") + e.what());
  } catch (const json::exception& e) {
    throw DataError(std::string("bad model: ") + e.what());
  }
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json(model).dump(2) << '\n';
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace evcs
