#include "rct/random_forest.h"

#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>

#include <gtest/gtest.h>

#include "rct/rng.h"

namespace rct {
namespace {

TEST(Gini, KnownValues) {
  EXPECT_DOUBLE_EQ(gini(5, 5), 0.5);
  EXPECT_DOUBLE_EQ(gini(4, 0), 0.0);
  EXPECT_DOUBLE_EQ(gini(1, 3), 1.0 - 0.0625 - 0.5625);
  EXPECT_THROW(gini(0, 0), std::invalid_argument);
}

TEST(BalancedWeights, EqualizeClassMass) {
  for (auto [neg, pos] : {std::pair<std::size_t, std::size_t>{90, 10}, {50, 50}, {7, 300}, {1, 1}}) {
    const auto w = balanced_class_weights(neg, pos);
    const double n = static_cast<double>(neg + pos);
    EXPECT_NEAR(w[0] * neg, n / 2, 1e-12);
    EXPECT_NEAR(w[1] * pos, n / 2, 1e-12);
  }
  const auto single = balanced_class_weights(0, 5);
  EXPECT_EQ(single[0], 0.0);
  EXPECT_DOUBLE_EQ(single[1], 0.5);
}

// Every midpoint between consecutive distinct values of every feature.
std::optional<SplitChoice> brute_best_split(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                            const std::vector<double>& w,
                                            const std::vector<std::size_t>& features,
                                            std::size_t min_leaf) {
  std::optional<SplitChoice> best;
  for (std::size_t f : features) {
    std::vector<double> values;
    for (Eigen::Index i = 0; i < X.rows(); ++i) values.push_back(X(i, f));
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t v = 0; v + 1 < values.size(); ++v) {
      const double t = (values[v] + values[v + 1]) / 2;
      double wl[2] = {0, 0}, wr[2] = {0, 0};
      std::size_t nl = 0, nr = 0;
      for (Eigen::Index i = 0; i < X.rows(); ++i) {
        if (X(i, f) <= t) {
          wl[y[i]] += w[i];
          ++nl;
        } else {
          wr[y[i]] += w[i];
          ++nr;
        }
      }
      if (nl < min_leaf || nr < min_leaf) continue;
      const double imp = (wl[0] + wl[1]) * gini(wl[0], wl[1]) + (wr[0] + wr[1]) * gini(wr[0], wr[1]);
      if (!best || imp < best->weighted_impurity - 1e-12) {
        best = SplitChoice{static_cast<std::int32_t>(f), t, imp};
      }
    }
  }
  return best;
}

TEST(BestSplit, MatchesExhaustiveSearch) {
  Rng rng(3);
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = 3 + rng.uniform_index(6);
    Eigen::MatrixXd X(n, 2);
    std::vector<int> y(n);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
      X(i, 0) = static_cast<double>(rng.uniform_index(5));
      X(i, 1) = rng.uniform();
      y[i] = rng.uniform() < 0.5 ? 1 : 0;
      w[i] = 0.5 + rng.uniform();
    }
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    const std::vector<std::size_t> features{0, 1};
    const std::size_t min_leaf = 1 + rng.uniform_index(2);
    const auto got = best_split(X, y, rows, w, features, min_leaf);
    const auto want = brute_best_split(X, y, w, features, min_leaf);
    ASSERT_EQ(got.has_value(), want.has_value()) << "rep " << rep;
    if (!got) continue;
    EXPECT_NEAR(got->weighted_impurity, want->weighted_impurity, 1e-12) << "rep " << rep;
  }
}

RFConfig exact_config() {
  RFConfig c;
  c.n_trees = 1;
  c.bootstrap = false;
  c.min_samples_leaf = 1;
  c.features_per_split = FeatureSubset::kAll;
  c.class_weight_mode = ClassWeightMode::kNone;
  return c;
}

TEST(Forest, StumpSeparatesTwoPoints) {
  Eigen::MatrixXd X(2, 1);
  X << 0, 1;
  const std::vector<int> y{0, 1};
  const auto forest = fit_forest(X, y, exact_config());
  const auto& tree = forest.trees()[0];
  ASSERT_EQ(tree.nodes.size(), 3u);
  EXPECT_EQ(tree.nodes[0].feature, 0);
  EXPECT_DOUBLE_EQ(tree.nodes[0].threshold, 0.5);
  const double lo[] = {0.0}, hi[] = {1.0};
  EXPECT_EQ(forest.predict_proba(lo), 0.0);
  EXPECT_EQ(forest.predict_proba(hi), 1.0);
}

TEST(Forest, PureNodeIsLeaf) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(10, 3);
  const std::vector<int> y(10, 1);
  const auto forest = fit_forest(X, y, exact_config());
  EXPECT_EQ(forest.trees()[0].nodes.size(), 1u);
  EXPECT_EQ(forest.predict_proba(std::vector<double>{0, 0, 0}), 1.0);
}

TEST(Forest, LearnsXorAtDepthTwo) {
  Eigen::MatrixXd X(8, 2);
  std::vector<int> y;
  for (int i = 0; i < 8; ++i) {
    const int a = i & 1, b = (i >> 1) & 1;
    X(i, 0) = a;
    X(i, 1) = b;
    y.push_back(a ^ b);
  }
  auto cfg = exact_config();
  cfg.max_depth = 2;
  const auto forest = fit_forest(X, y, cfg);
  EXPECT_LE(forest.trees()[0].depth(), 2u);
  const auto p = forest.predict_proba(X);
  for (int i = 0; i < 8; ++i) EXPECT_EQ(p[i], y[i]) << i;
}

TEST(Forest, ExactFitWithoutBootstrap) {
  Rng rng(5);
  Eigen::MatrixXd X(60, 4);
  std::vector<int> y(60);
  for (int i = 0; i < 60; ++i) {
    for (int j = 0; j < 4; ++j) X(i, j) = rng.normal();
    y[i] = rng.uniform() < 0.3 ? 1 : 0;
  }
  const auto p = fit_forest(X, y, exact_config()).predict_proba(X);
  for (int i = 0; i < 60; ++i) EXPECT_EQ(p[i], y[i]);
}

struct Blobs {
  Eigen::MatrixXd X;
  std::vector<int> y;
};

Blobs make_blobs(std::uint64_t seed, std::size_t n = 200) {
  Rng rng(seed);
  Blobs b{Eigen::MatrixXd(n, 5), {}};
  for (std::size_t i = 0; i < n; ++i) {
    const int label = rng.uniform() < 0.25 ? 1 : 0;
    for (int j = 0; j < 5; ++j) b.X(i, j) = rng.normal() + (j < 2 ? 1.5 * label : 0.0);
    b.y.push_back(label);
  }
  return b;
}

TEST(Forest, DeterministicForSeed) {
  const auto b = make_blobs(8);
  RFConfig cfg;
  cfg.n_trees = 25;
  cfg.seed = 99;
  const auto a = fit_forest(b.X, b.y, cfg);
  const auto c = fit_forest(b.X, b.y, cfg);
  EXPECT_EQ(a.serialize(), c.serialize());
  EXPECT_EQ(a.predict_proba(b.X), c.predict_proba(b.X));
  cfg.seed = 100;
  EXPECT_NE(fit_forest(b.X, b.y, cfg).serialize(), a.serialize());
}

TEST(Forest, ProbabilityIsMeanOfTrees) {
  const auto b = make_blobs(9);
  RFConfig cfg;
  cfg.n_trees = 15;
  const auto forest = fit_forest(b.X, b.y, cfg);
  for (Eigen::Index i = 0; i < 20; ++i) {
    const Eigen::VectorXd row = b.X.row(i);
    const std::span<const double> x(row.data(), row.size());
    const auto per = forest.per_tree_proba(x);
    ASSERT_EQ(per.size(), 15u);
    const double mean = std::accumulate(per.begin(), per.end(), 0.0) / 15.0;
    EXPECT_NEAR(forest.predict_proba(x), mean, 1e-15);
    EXPECT_GE(forest.predict_proba(x), 0.0);
    EXPECT_LE(forest.predict_proba(x), 1.0);
  }
}

TEST(Forest, SerializeRoundTripIsExact) {
  const auto b = make_blobs(10);
  RFConfig cfg;
  cfg.n_trees = 10;
  const auto forest = fit_forest(b.X, b.y, cfg);
  const auto path = std::filesystem::temp_directory_path() / "rct_forest_test.txt";
  forest.save(path);
  const auto loaded = Forest::load(path);
  std::filesystem::remove(path);
  EXPECT_EQ(loaded.serialize(), forest.serialize());
  EXPECT_EQ(loaded.predict_proba(b.X), forest.predict_proba(b.X));
  EXPECT_THROW(Forest::deserialize("not a forest"), std::runtime_error);
}

TEST(Forest, MinLeafAndDepthRespected) {
  const auto b = make_blobs(11);
  RFConfig cfg;
  cfg.n_trees = 5;
  cfg.min_samples_leaf = 7;
  cfg.max_depth = 4;
  const auto forest = fit_forest(b.X, b.y, cfg);
  for (const auto& t : forest.trees()) EXPECT_LE(t.depth(), 4u);
  // Without bootstrap, leaf sample counts are visible through unit weights.
  cfg.bootstrap = false;
  cfg.class_weight_mode = ClassWeightMode::kNone;
  const auto unweighted = fit_forest(b.X, b.y, cfg);
  for (const auto& t : unweighted.trees()) {
    for (const auto& node : t.nodes) {
      if (node.is_leaf()) EXPECT_GE(node.weight_negative + node.weight_positive, 7.0);
    }
  }
}

TEST(Forest, BalancedRootMassIsEqualPerClass) {
  const auto b = make_blobs(12);
  RFConfig cfg;
  cfg.n_trees = 6;
  const auto forest = fit_forest(b.X, b.y, cfg);
  for (const auto& t : forest.trees()) {
    EXPECT_NEAR(t.nodes[0].weight_negative, t.nodes[0].weight_positive, 1e-9);
  }
}

TEST(Forest, SeparatesBlobs) {
  const auto train = make_blobs(13, 300);
  const auto test = make_blobs(14, 200);
  RFConfig cfg;
  cfg.n_trees = 50;
  const auto p = fit_forest(train.X, train.y, cfg).predict_proba(test.X);
  double correct = 0;
  for (std::size_t i = 0; i < p.size(); ++i) correct += (p[i] >= 0.5) == (test.y[i] == 1);
  EXPECT_GT(correct / p.size(), 0.8);
}

TEST(RFConfig, FeatureCountsAndValidation) {
  RFConfig c;
  EXPECT_EQ(c.features_to_try(30), 5u);
  c.features_per_split = FeatureSubset::kLog2;
  EXPECT_EQ(c.features_to_try(32), 5u);
  c.features_per_split = FeatureSubset::kAll;
  EXPECT_EQ(c.features_to_try(7), 7u);
  c.features_per_split = FeatureSubset::kFixed;
  c.fixed_features = 50;
  EXPECT_EQ(c.features_to_try(7), 7u);
  c = {};
  c.n_trees = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace rct
