#include "rct/random_forest.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "rct/rng.h"

namespace rct {
namespace {

constexpr std::string_view kForestMagic = "rct-forest";
constexpr int kForestVersion = 1;

// W * gini = W - (w0^2 + w1^2) / W
double weighted_gini(double w0, double w1) {
  const double w = w0 + w1;
  return w > 0.0 ? w - (w0 * w0 + w1 * w1) / w : 0.0;
}

bool impurity_tie(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

// Lexicographic preference: lower impurity, then lower feature, then lower
// threshold.
bool better(const SplitChoice& cand, const std::optional<SplitChoice>& best) {
  if (!best) return true;
  if (!impurity_tie(cand.weighted_impurity, best->weighted_impurity)) {
    return cand.weighted_impurity < best->weighted_impurity;
  }
  if (cand.feature != best->feature) return cand.feature < best->feature;
  return cand.threshold < best->threshold;
}

// Best threshold of one feature; nullopt when the feature is constant on the
// rows or no threshold respects min_samples_leaf. `constant` reports the
// former.
std::optional<SplitChoice> best_split_on_feature(
    const Eigen::MatrixXd& X, std::span<const int> y, std::span<const std::size_t> rows,
    std::span<const double> weights, std::size_t feature, std::size_t min_samples_leaf,
    std::vector<std::size_t>& order, bool& constant) {
  const auto f = static_cast<Eigen::Index>(feature);
  order.resize(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double xa = X(static_cast<Eigen::Index>(rows[a]), f);
    const double xb = X(static_cast<Eigen::Index>(rows[b]), f);
    return xa < xb || (xa == xb && rows[a] < rows[b]);
  });
  const double lo = X(static_cast<Eigen::Index>(rows[order.front()]), f);
  const double hi = X(static_cast<Eigen::Index>(rows[order.back()]), f);
  constant = !(lo < hi);
  if (constant) return std::nullopt;

  double total0 = 0.0, total1 = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    (y[rows[i]] == 1 ? total1 : total0) += weights[i];
  }
  std::optional<SplitChoice> best;
  double left0 = 0.0, left1 = 0.0;
  const std::size_t k = rows.size();
  for (std::size_t i = 0; i + 1 < k; ++i) {
    const auto oi = order[i];
    (y[rows[oi]] == 1 ? left1 : left0) += weights[oi];
    const double xi = X(static_cast<Eigen::Index>(rows[oi]), f);
    const double xn = X(static_cast<Eigen::Index>(rows[order[i + 1]]), f);
    if (!(xi < xn)) continue;
    if (i + 1 < min_samples_leaf || k - i - 1 < min_samples_leaf) continue;
    double threshold = xi + (xn - xi) / 2.0;
    if (!(threshold < xn)) threshold = xi;
    SplitChoice cand{static_cast<std::int32_t>(feature), threshold,
                     weighted_gini(left0, left1) +
                         weighted_gini(total0 - left0, total1 - left1)};
    if (!best || (cand.weighted_impurity < best->weighted_impurity &&
                  !impurity_tie(cand.weighted_impurity, best->weighted_impurity))) {
      best = cand;
    }
  }
  return best;
}

struct PendingNode {
  std::size_t node = 0;
  std::vector<std::size_t> rows;
  std::vector<double> weights;
  std::size_t depth = 0;
};

DecisionTree grow_tree(const Eigen::MatrixXd& X, std::span<const int> y,
                       const RFConfig& config, std::uint64_t tree_seed) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto d = static_cast<std::size_t>(X.cols());
  Rng rng(tree_seed);
  DecisionTree tree;
  tree.seed = tree_seed;

  std::vector<std::size_t> multiplicity(n, 0);
  if (config.bootstrap) {
    for (std::size_t i = 0; i < n; ++i) ++multiplicity[rng.uniform_index(n)];
  } else {
    std::fill(multiplicity.begin(), multiplicity.end(), 1);
  }
  std::array<std::size_t, 2> class_count{};
  for (std::size_t i = 0; i < n; ++i) {
    class_count[static_cast<std::size_t>(y[i])] += multiplicity[i];
  }
  std::array<double, 2> class_weight{1.0, 1.0};
  if (config.class_weight_mode == ClassWeightMode::kBalancedSubsample) {
    class_weight = balanced_class_weights(class_count[0], class_count[1]);
  }

  PendingNode root;
  for (std::size_t i = 0; i < n; ++i) {
    if (multiplicity[i] == 0) continue;
    root.rows.push_back(i);
    root.weights.push_back(static_cast<double>(multiplicity[i]) *
                           class_weight[static_cast<std::size_t>(y[i])]);
  }
  tree.nodes.emplace_back();
  std::vector<PendingNode> stack;
  stack.push_back(std::move(root));

  const std::size_t mtry = config.features_to_try(d);
  std::vector<std::size_t> feature_order(d);
  std::vector<std::size_t> scratch;

  while (!stack.empty()) {
    PendingNode cur = std::move(stack.back());
    stack.pop_back();
    double w0 = 0.0, w1 = 0.0;
    for (std::size_t i = 0; i < cur.rows.size(); ++i) {
      (y[cur.rows[i]] == 1 ? w1 : w0) += cur.weights[i];
    }
    TreeNode& node = tree.nodes[cur.node];
    node.weight_negative = w0;
    node.weight_positive = w1;
    node.p_positive = (w0 + w1) > 0.0 ? w1 / (w0 + w1) : 0.0;

    const bool pure = w0 == 0.0 || w1 == 0.0;
    const bool depth_cap = config.max_depth && cur.depth >= *config.max_depth;
    if (pure || depth_cap || cur.rows.size() < 2 * config.min_samples_leaf) continue;

    std::iota(feature_order.begin(), feature_order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(feature_order));
    std::optional<SplitChoice> best;
    std::size_t visited = 0;
    for (std::size_t f : feature_order) {
      if (visited >= mtry) break;
      bool constant = false;
      auto cand = best_split_on_feature(X, y, cur.rows, cur.weights, f,
                                        config.min_samples_leaf, scratch, constant);
      if (constant) continue;
      ++visited;
      if (cand && better(*cand, best)) best = cand;
    }
    if (!best) continue;

    PendingNode left, right;
    left.depth = right.depth = cur.depth + 1;
    const auto bf = static_cast<Eigen::Index>(best->feature);
    for (std::size_t i = 0; i < cur.rows.size(); ++i) {
      auto& side = X(static_cast<Eigen::Index>(cur.rows[i]), bf) <= best->threshold ? left : right;
      side.rows.push_back(cur.rows[i]);
      side.weights.push_back(cur.weights[i]);
    }
    const auto left_index = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    TreeNode& parent = tree.nodes[cur.node];
    parent.feature = best->feature;
    parent.threshold = best->threshold;
    parent.left = left_index;
    parent.right = left_index + 1;
    left.node = static_cast<std::size_t>(left_index);
    right.node = static_cast<std::size_t>(left_index + 1);
    stack.push_back(std::move(right));
    stack.push_back(std::move(left));
  }
  return tree;
}

void append_number(std::string& out, double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), ptr);
}

double parse_double(const std::string& word) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), v);
  if (ec != std::errc() || ptr != word.data() + word.size()) {
    throw std::runtime_error("forest file: bad number '" + word + "'");
  }
  return v;
}

}  // namespace

void RFConfig::validate() const {
  if (n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
  if (min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be >= 1");
  if (features_per_split == FeatureSubset::kFixed && fixed_features < 1) {
    throw std::invalid_argument("fixed feature count must be >= 1");
  }
}

std::size_t RFConfig::features_to_try(std::size_t n_features) const {
  std::size_t k = n_features;
  switch (features_per_split) {
    case FeatureSubset::kSqrt:
      k = static_cast<std::size_t>(std::sqrt(static_cast<double>(n_features)));
      break;
    case FeatureSubset::kLog2:
      k = static_cast<std::size_t>(std::log2(static_cast<double>(std::max<std::size_t>(n_features, 1))));
      break;
    case FeatureSubset::kAll:
      break;
    case FeatureSubset::kFixed:
      k = fixed_features;
      break;
  }
  return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(n_features, 1));
}

double gini(double weight_negative, double weight_positive) {
  const double w = weight_negative + weight_positive;
  if (!(w > 0.0)) throw std::invalid_argument("gini of zero total weight");
  const double p0 = weight_negative / w;
  const double p1 = weight_positive / w;
  return 1.0 - (p0 * p0 + p1 * p1);
}

std::array<double, 2> balanced_class_weights(std::size_t count_negative,
                                             std::size_t count_positive) {
  const double n = static_cast<double>(count_negative + count_positive);
  return {count_negative ? n / (2.0 * static_cast<double>(count_negative)) : 0.0,
          count_positive ? n / (2.0 * static_cast<double>(count_positive)) : 0.0};
}

std::optional<SplitChoice> best_split(const Eigen::MatrixXd& X, std::span<const int> y,
                                      std::span<const std::size_t> rows,
                                      std::span<const double> weights,
                                      std::span<const std::size_t> features,
                                      std::size_t min_samples_leaf) {
  std::optional<SplitChoice> best;
  std::vector<std::size_t> scratch;
  for (auto f : features) {
    bool constant = false;
    auto cand = best_split_on_feature(X, y, rows, weights, f, min_samples_leaf, scratch,
                                      constant);
    if (cand && better(*cand, best)) best = cand;
  }
  return best;
}

double DecisionTree::predict_proba(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& node = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold
                                     ? node.left
                                     : node.right);
  }
  return nodes[i].p_positive;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> depth(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, depth[i]);
    if (!nodes[i].is_leaf()) {
      depth[static_cast<std::size_t>(nodes[i].left)] = depth[i] + 1;
      depth[static_cast<std::size_t>(nodes[i].right)] = depth[i] + 1;
    }
  }
  return deepest;
}

Forest fit_forest(const Eigen::MatrixXd& X, std::span<const int> y, const RFConfig& config) {
  config.validate();
  if (static_cast<std::size_t>(X.rows()) != y.size()) {
    throw std::invalid_argument("fit_forest: row count does not match labels");
  }
  if (X.rows() == 0 || X.cols() == 0) throw std::invalid_argument("fit_forest: empty input");
  for (int label : y) {
    if (label != 0 && label != 1) throw std::invalid_argument("fit_forest: non-binary label");
  }
  Forest forest;
  forest.n_features_ = static_cast<std::size_t>(X.cols());
  forest.trees_.reserve(config.n_trees);
  for (std::size_t t = 0; t < config.n_trees; ++t) {
    forest.trees_.push_back(grow_tree(X, y, config, derive_seed(config.seed, t)));
  }
  return forest;
}

double Forest::predict_proba(std::span<const double> x) const {
  if (x.size() != n_features_) {
    throw std::invalid_argument("forest expects " + std::to_string(n_features_) +
                                " features, got " + std::to_string(x.size()));
  }
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.predict_proba(x);
  return sum / static_cast<double>(trees_.size());
}

std::vector<double> Forest::per_tree_proba(std::span<const double> x) const {
  if (x.size() != n_features_) throw std::invalid_argument("forest: dimension mismatch");
  std::vector<double> out;
  out.reserve(trees_.size());
  for (const auto& t : trees_) out.push_back(t.predict_proba(x));
  return out;
}

std::vector<double> Forest::predict_proba(const Eigen::MatrixXd& X) const {
  if (static_cast<std::size_t>(X.cols()) != n_features_) {
    throw std::invalid_argument("forest expects " + std::to_string(n_features_) +
                                " columns, got " + std::to_string(X.cols()));
  }
  std::vector<double> out(static_cast<std::size_t>(X.rows()));
  std::vector<double> row(n_features_);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (std::size_t j = 0; j < n_features_; ++j) row[j] = X(i, static_cast<Eigen::Index>(j));
    out[static_cast<std::size_t>(i)] = predict_proba(row);
  }
  return out;
}

std::string Forest::serialize() const {
  std::string out = std::string(kForestMagic) + " " + std::to_string(kForestVersion) + "\n";
  out += "features " + std::to_string(n_features_) + " trees " +
         std::to_string(trees_.size()) + "\n";
  for (const auto& t : trees_) {
    out += "tree " + std::to_string(t.seed) + " " + std::to_string(t.nodes.size()) + "\n";
    for (const auto& node : t.nodes) {
      out += std::to_string(node.feature) + " ";
      append_number(out, node.threshold);
      out += " " + std::to_string(node.left) + " " + std::to_string(node.right) + " ";
      append_number(out, node.weight_negative);
      out.push_back(' ');
      append_number(out, node.weight_positive);
      out.push_back(' ');
      append_number(out, node.p_positive);
      out.push_back('\n');
    }
  }
  return out;
}

Forest Forest::deserialize(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string magic, tag;
  int version = 0;
  in >> magic >> version;
  if (magic != kForestMagic || version != kForestVersion) {
    throw std::runtime_error("not a forest file (version " + std::to_string(kForestVersion) + ")");
  }
  Forest forest;
  std::size_t n_trees = 0;
  in >> tag >> forest.n_features_;
  if (tag != "features") throw std::runtime_error("forest file: expected 'features'");
  in >> tag >> n_trees;
  if (tag != "trees") throw std::runtime_error("forest file: expected 'trees'");
  for (std::size_t t = 0; t < n_trees; ++t) {
    DecisionTree tree;
    std::size_t n_nodes = 0;
    in >> tag >> tree.seed >> n_nodes;
    if (!in || tag != "tree") throw std::runtime_error("forest file: expected 'tree'");
    tree.nodes.resize(n_nodes);
    for (auto& node : tree.nodes) {
      std::string thr, w0, w1, p;
      in >> node.feature >> thr >> node.left >> node.right >> w0 >> w1 >> p;
      if (!in) throw std::runtime_error("forest file: truncated node record");
      node.threshold = parse_double(thr);
      node.weight_negative = parse_double(w0);
      node.weight_positive = parse_double(w1);
      node.p_positive = parse_double(p);
      const auto limit = static_cast<std::int32_t>(n_nodes);
      if (!node.is_leaf() && (node.left <= 0 || node.left >= limit || node.right <= 0 ||
                              node.right >= limit ||
                              static_cast<std::size_t>(node.feature) >= forest.n_features_)) {
        throw std::runtime_error("forest file: node references out of range");
      }
    }
    forest.trees_.push_back(std::move(tree));
  }
  return forest;
}

void Forest::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write forest " + path.string());
  out << serialize();
}

Forest Forest::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read forest " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return deserialize(buffer.str());
}

}  // namespace rct
