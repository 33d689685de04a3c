#ifndef RCT_RANDOM_FOREST_H_
#define RCT_RANDOM_FOREST_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace rct {

enum class FeatureSubset { kSqrt, kLog2, kAll, kFixed };
enum class ClassWeightMode { kNone, kBalancedSubsample };

struct RFConfig {
  std::size_t n_trees = 200;
  std::optional<std::size_t> max_depth;  // unlimited when empty
  std::size_t min_samples_leaf = 2;
  FeatureSubset features_per_split = FeatureSubset::kSqrt;
  std::size_t fixed_features = 1;  // used by FeatureSubset::kFixed
  bool bootstrap = true;
  std::uint64_t seed = 0;
  ClassWeightMode class_weight_mode = ClassWeightMode::kBalancedSubsample;

  void validate() const;
  std::size_t features_to_try(std::size_t n_features) const;
};

// A node is a leaf when feature < 0. Samples with x[feature] <= threshold
// go left.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double weight_negative = 0.0;
  double weight_positive = 0.0;
  double p_positive = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::uint64_t seed = 0;

  double predict_proba(std::span<const double> x) const;
  std::size_t depth() const;
};

// 1 - sum_c (w_c / W)^2. Throws on zero total weight.
double gini(double weight_negative, double weight_positive);

// Per-class weights n / (2 * count_c) for the given class counts; a class with
// no samples gets weight 0.
std::array<double, 2> balanced_class_weights(std::size_t count_negative,
                                             std::size_t count_positive);

class Forest {
 public:
  std::size_t n_features() const { return n_features_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  double predict_proba(std::span<const double> x) const;
  std::vector<double> predict_proba(const Eigen::MatrixXd& X) const;
  std::vector<double> per_tree_proba(std::span<const double> x) const;

  std::string serialize() const;
  static Forest deserialize(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Forest load(const std::filesystem::path& path);

 private:
  friend Forest fit_forest(const Eigen::MatrixXd& X, std::span<const int> y,
                           const RFConfig& config);
  std::size_t n_features_ = 0;
  std::vector<DecisionTree> trees_;
};

// Each tree: bootstrap sample (if enabled), class weights computed on that
// sample, greedy CART growth on weighted Gini with a random feature subset per
// split. Tree t draws from a stream derived from (config.seed, t).
Forest fit_forest(const Eigen::MatrixXd& X, std::span<const int> y, const RFConfig& config);

struct SplitChoice {
  std::int32_t feature = -1;
  double threshold = 0.0;
  double weighted_impurity = 0.0;  // W_left * gini(left) + W_right * gini(right)
};

// Best split over the listed features for the given weighted rows, honouring
// min_samples_leaf. Ties go to the lower feature index, then lower threshold.
std::optional<SplitChoice> best_split(const Eigen::MatrixXd& X, std::span<const int> y,
                                      std::span<const std::size_t> rows,
                                      std::span<const double> weights,
                                      std::span<const std::size_t> features,
                                      std::size_t min_samples_leaf);

}  // namespace rct

#endif  // RCT_RANDOM_FOREST_H_
