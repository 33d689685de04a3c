#ifndef RCT_RUN_CONFIG_H_
#define RCT_RUN_CONFIG_H_

#include <filesystem>
#include <string>
#include <string_view>

#include "rct/cotrain.h"

namespace rct {

// JSON layout, every key optional:
//   {"seed": 7,
//    "cotrain": {"max_outer_iterations", "inner_ppo_rounds", "baseline_ppo_rounds",
//                "patience", "pca_k", "improvement_tolerance", "target_recall",
//                "scheme": "iterative|single_pass", "optimizer": "ppo|reinforce"},
//    "data":    {"test_fraction", "validation_fraction", "sparse_threshold",
//                "vocab_min_count"},
//    "reward":  {"lambda", "r_correct", "r_false_negative", "r_false_positive",
//                "positive_oversample_weight"},
//    "ppo":     {"clip_epsilon", "value_coef", "entropy_coef", "learning_rate",
//                "inner_epochs", "batch_size", "minibatch_size", "optimizer": "adam|sgd",
//                "normalize_advantage"},
//    "rf":      {"n_trees", "max_depth", "min_samples_leaf",
//                "max_features": "sqrt|log2|all|<int>", "bootstrap",
//                "class_weight": "balanced_subsample|none"},
//    "encoder": {"d_model", "n_layers", "n_heads", "d_ff", "max_len", "max_segments",
//                "numeric_embedding"},
//    "seeds":   {"master", "split", "policy_init", "forest", "sampling"}}
// "seed" (or seeds.master) derives every seed not given explicitly. Unknown
// keys are rejected.
CoTrainConfig parse_config(std::string_view json_text, const CoTrainConfig& defaults = {});
CoTrainConfig load_config(const std::filesystem::path& path,
                          const CoTrainConfig& defaults = {});
// Full snapshot with every key present; parse_config(config_to_json(c)) == c.
std::string config_to_json(const CoTrainConfig& config);

// Replaces the master seed and re-derives the per-purpose seeds.
CoTrainConfig with_seed(CoTrainConfig config, std::uint64_t master);

}  // namespace rct

#endif  // RCT_RUN_CONFIG_H_
