#include "rct/run_config.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace rct {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::string_view section,
                    std::initializer_list<std::string_view> known) {
  for (const auto& [key, value] : obj.items()) {
    bool found = false;
    for (auto k : known) found = found || key == k;
    if (!found) {
      throw std::invalid_argument("config: unknown key '" + std::string(section) +
                                  (section.empty() ? "" : ".") + key + "'");
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

std::string features_to_text(const RFConfig& rf) {
  switch (rf.features_per_split) {
    case FeatureSubset::kSqrt: return "sqrt";
    case FeatureSubset::kLog2: return "log2";
    case FeatureSubset::kAll: return "all";
    case FeatureSubset::kFixed: return std::to_string(rf.fixed_features);
  }
  return "sqrt";
}

void features_from(const json& value, RFConfig& rf) {
  if (value.is_number_integer()) {
    rf.features_per_split = FeatureSubset::kFixed;
    rf.fixed_features = value.get<std::size_t>();
    return;
  }
  const auto text = value.get<std::string>();
  if (text == "sqrt") {
    rf.features_per_split = FeatureSubset::kSqrt;
  } else if (text == "log2") {
    rf.features_per_split = FeatureSubset::kLog2;
  } else if (text == "all") {
    rf.features_per_split = FeatureSubset::kAll;
  } else {
    rf.features_per_split = FeatureSubset::kFixed;
    rf.fixed_features = std::stoul(text);
  }
}

}  // namespace

CoTrainConfig with_seed(CoTrainConfig config, std::uint64_t master) {
  config.seeds = SeedConfig::from_master(master);
  return config;
}

CoTrainConfig parse_config(std::string_view json_text, const CoTrainConfig& defaults) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!root.is_object()) throw std::invalid_argument("config: top level must be an object");
  reject_unknown(root, "", {"seed", "cotrain", "data", "reward", "ppo", "rf", "encoder", "seeds"});

  CoTrainConfig c = defaults;
  try {
    if (root.contains("seed")) c.seeds = SeedConfig::from_master(root.at("seed").get<std::uint64_t>());
    if (root.contains("cotrain")) {
      const auto& o = root.at("cotrain");
      reject_unknown(o, "cotrain",
                     {"max_outer_iterations", "inner_ppo_rounds", "baseline_ppo_rounds",
                      "patience", "pca_k", "improvement_tolerance", "target_recall", "scheme",
                      "optimizer"});
      read(o, "max_outer_iterations", c.max_outer_iterations);
      read(o, "inner_ppo_rounds", c.inner_ppo_rounds);
      read(o, "baseline_ppo_rounds", c.baseline_ppo_rounds);
      read(o, "patience", c.patience);
      read(o, "pca_k", c.pca_k);
      read(o, "improvement_tolerance", c.improvement_tolerance);
      read(o, "target_recall", c.target_recall);
      if (o.contains("scheme")) c.scheme = parse_scheme(o.at("scheme").get<std::string>());
      if (o.contains("optimizer")) {
        c.algorithm = parse_algorithm(o.at("optimizer").get<std::string>());
      }
    }
    if (root.contains("data")) {
      const auto& o = root.at("data");
      reject_unknown(o, "data",
                     {"test_fraction", "validation_fraction", "sparse_threshold",
                      "vocab_min_count"});
      read(o, "test_fraction", c.data.test_fraction);
      read(o, "validation_fraction", c.data.validation_fraction);
      read(o, "sparse_threshold", c.data.sparse_threshold);
      read(o, "vocab_min_count", c.data.vocab_min_count);
    }
    if (root.contains("reward")) {
      const auto& o = root.at("reward");
      reject_unknown(o, "reward",
                     {"lambda", "r_correct", "r_false_negative", "r_false_positive",
                      "positive_oversample_weight"});
      read(o, "lambda", c.reward.lambda);
      read(o, "r_correct", c.reward.r_correct);
      read(o, "r_false_negative", c.reward.r_false_negative);
      read(o, "r_false_positive", c.reward.r_false_positive);
      read(o, "positive_oversample_weight", c.reward.positive_oversample_weight);
    }
    if (root.contains("ppo")) {
      const auto& o = root.at("ppo");
      reject_unknown(o, "ppo",
                     {"clip_epsilon", "value_coef", "entropy_coef", "learning_rate",
                      "inner_epochs", "batch_size", "minibatch_size", "optimizer",
                      "normalize_advantage"});
      read(o, "clip_epsilon", c.ppo.clip_epsilon);
      read(o, "value_coef", c.ppo.value_coef);
      read(o, "entropy_coef", c.ppo.entropy_coef);
      read(o, "learning_rate", c.ppo.learning_rate);
      read(o, "inner_epochs", c.ppo.inner_epochs);
      read(o, "batch_size", c.ppo.batch_size);
      read(o, "minibatch_size", c.ppo.minibatch_size);
      read(o, "normalize_advantage", c.ppo.normalize_advantage);
      if (o.contains("optimizer")) {
        const auto name = o.at("optimizer").get<std::string>();
        if (name == "adam") {
          c.ppo.optimizer = OptimizerKind::kAdam;
        } else if (name == "sgd") {
          c.ppo.optimizer = OptimizerKind::kSgd;
        } else {
          throw std::invalid_argument("config: unknown ppo.optimizer '" + name + "'");
        }
      }
    }
    if (root.contains("rf")) {
      const auto& o = root.at("rf");
      reject_unknown(o, "rf",
                     {"n_trees", "max_depth", "min_samples_leaf", "max_features", "bootstrap",
                      "class_weight"});
      read(o, "n_trees", c.rf.n_trees);
      if (o.contains("max_depth")) {
        const auto& d = o.at("max_depth");
        if (d.is_null()) {
          c.rf.max_depth.reset();
        } else {
          c.rf.max_depth = d.get<std::size_t>();
        }
      }
      read(o, "min_samples_leaf", c.rf.min_samples_leaf);
      if (o.contains("max_features")) features_from(o.at("max_features"), c.rf);
      read(o, "bootstrap", c.rf.bootstrap);
      if (o.contains("class_weight")) {
        const auto mode = o.at("class_weight").get<std::string>();
        if (mode == "balanced_subsample") {
          c.rf.class_weight_mode = ClassWeightMode::kBalancedSubsample;
        } else if (mode == "none") {
          c.rf.class_weight_mode = ClassWeightMode::kNone;
        } else {
          throw std::invalid_argument("config: unknown rf.class_weight '" + mode + "'");
        }
      }
    }
    if (root.contains("encoder")) {
      const auto& o = root.at("encoder");
      reject_unknown(o, "encoder",
                     {"d_model", "n_layers", "n_heads", "d_ff", "max_len", "max_segments",
                      "numeric_embedding"});
      read(o, "d_model", c.encoder.d_model);
      read(o, "n_layers", c.encoder.n_layers);
      read(o, "n_heads", c.encoder.n_heads);
      read(o, "d_ff", c.encoder.d_ff);
      read(o, "max_len", c.encoder.max_len);
      read(o, "max_segments", c.encoder.max_segments);
      read(o, "numeric_embedding", c.encoder.numeric_embedding);
    }
    if (root.contains("seeds")) {
      const auto& o = root.at("seeds");
      reject_unknown(o, "seeds", {"master", "split", "policy_init", "forest", "sampling"});
      if (o.contains("master")) c.seeds = SeedConfig::from_master(o.at("master").get<std::uint64_t>());
      read(o, "split", c.seeds.split);
      read(o, "policy_init", c.seeds.policy_init);
      read(o, "forest", c.seeds.forest);
      read(o, "sampling", c.seeds.sampling);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

CoTrainConfig load_config(const std::filesystem::path& path, const CoTrainConfig& defaults) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), defaults);
}

std::string config_to_json(const CoTrainConfig& c) {
  json root;
  root["cotrain"] = {{"max_outer_iterations", c.max_outer_iterations},
                     {"inner_ppo_rounds", c.inner_ppo_rounds},
                     {"baseline_ppo_rounds", c.baseline_ppo_rounds},
                     {"patience", c.patience},
                     {"pca_k", c.pca_k},
                     {"improvement_tolerance", c.improvement_tolerance},
                     {"target_recall", c.target_recall},
                     {"scheme", std::string(to_string(c.scheme))},
                     {"optimizer", std::string(to_string(c.algorithm))}};
  root["data"] = {{"test_fraction", c.data.test_fraction},
                  {"validation_fraction", c.data.validation_fraction},
                  {"sparse_threshold", c.data.sparse_threshold},
                  {"vocab_min_count", c.data.vocab_min_count}};
  root["reward"] = {{"lambda", c.reward.lambda},
                    {"r_correct", c.reward.r_correct},
                    {"r_false_negative", c.reward.r_false_negative},
                    {"r_false_positive", c.reward.r_false_positive},
                    {"positive_oversample_weight", c.reward.positive_oversample_weight}};
  root["ppo"] = {{"clip_epsilon", c.ppo.clip_epsilon},
                 {"value_coef", c.ppo.value_coef},
                 {"entropy_coef", c.ppo.entropy_coef},
                 {"learning_rate", c.ppo.learning_rate},
                 {"inner_epochs", c.ppo.inner_epochs},
                 {"batch_size", c.ppo.batch_size},
                 {"minibatch_size", c.ppo.minibatch_size},
                 {"optimizer", c.ppo.optimizer == OptimizerKind::kAdam ? "adam" : "sgd"},
                 {"normalize_advantage", c.ppo.normalize_advantage}};
  root["rf"] = {{"n_trees", c.rf.n_trees},
                {"max_depth", c.rf.max_depth ? json(*c.rf.max_depth) : json(nullptr)},
                {"min_samples_leaf", c.rf.min_samples_leaf},
                {"max_features", features_to_text(c.rf)},
                {"bootstrap", c.rf.bootstrap},
                {"class_weight", c.rf.class_weight_mode == ClassWeightMode::kBalancedSubsample
                                     ? "balanced_subsample"
                                     : "none"}};
  root["encoder"] = {{"d_model", c.encoder.d_model},
                     {"n_layers", c.encoder.n_layers},
                     {"n_heads", c.encoder.n_heads},
                     {"d_ff", c.encoder.d_ff},
                     {"max_len", c.encoder.max_len},
                     {"max_segments", c.encoder.max_segments},
                     {"numeric_embedding", c.encoder.numeric_embedding}};
  root["seeds"] = {{"master", c.seeds.master},
                   {"split", c.seeds.split},
                   {"policy_init", c.seeds.policy_init},
                   {"forest", c.seeds.forest},
                   {"sampling", c.seeds.sampling}};
  return root.dump(2) + "\n";
}

}  // namespace rct
