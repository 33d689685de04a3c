#include "rct/cotrain.h"

#include <algorithm>
#include <set>
#include <string>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "rct/rng.h"
#include "rct/run_artifacts.h"

namespace rct {
namespace {

// Two informative columns (one numeric, one categorical) plus noise; the
// numeric column alone separates the classes.
TabularDataset toy_dataset(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::string csv = "marker,group,noise,y\n";
  for (std::size_t i = 0; i < n; ++i) {
    const int y = i % 3 == 0 ? 1 : 0;
    const double marker = (y ? 5.0 : 1.0) + rng.uniform();
    const char* group = (y ? rng.uniform() < 0.8 : rng.uniform() < 0.2) ? "A" : "B";
    csv += fmt::format("{:.2f},{},{:.2f},{}\n", marker, group, rng.normal(), y);
  }
  LoadOptions options;
  options.label_column = "y";
  return parse_csv_dataset(csv, options);
}

CoTrainConfig small_config(std::uint64_t seed = 3) {
  CoTrainConfig c;
  c.max_outer_iterations = 4;
  c.inner_ppo_rounds = 1;
  c.patience = 2;
  c.pca_k = 2;
  c.ppo.batch_size = 32;
  c.ppo.minibatch_size = 16;
  c.ppo.inner_epochs = 2;
  c.ppo.learning_rate = 3e-3;
  c.rf.n_trees = 20;
  c.encoder.d_model = 8;
  c.encoder.n_layers = 1;
  c.encoder.n_heads = 2;
  c.encoder.d_ff = 16;
  c.encoder.max_len = 0;
  c.encoder.max_segments = 8;
  c.seeds = SeedConfig::from_master(seed);
  return c;
}

struct Fixture {
  CoTrainConfig config = small_config();
  ProvenanceAudit audit;
  PreparedData data;
  ExperimentResult result;
};

const Fixture& shared_run() {
  static const Fixture f = [] {
    Fixture x;
    x.data = prepare_data(toy_dataset(90, 1), x.config, &x.audit);
    x.result = run_experiment(x.data, x.config, &x.audit);
    return x;
  }();
  return f;
}

TEST(PrepareData, SplitsAreDisjointAndTagged) {
  const auto& f = shared_run();
  const auto& d = f.data;
  EXPECT_EQ(d.train.labels.size() + d.validation.labels.size() + d.test.labels.size(), 90u);
  EXPECT_EQ(d.test.labels.size(), 18u);
  std::set<std::size_t> seen;
  for (const auto* part : {&d.train, &d.validation, &d.test}) {
    for (const auto& r : part->rows.rows) EXPECT_TRUE(seen.insert(r.source_row).second);
  }
  for (auto t : d.train.tags) EXPECT_EQ(t, SplitTag::kTrain);
  for (auto t : d.validation.tags) EXPECT_EQ(t, SplitTag::kValidation);
  for (auto t : d.test.tags) EXPECT_EQ(t, SplitTag::kTest);
  EXPECT_EQ(d.train.tokens.size(), d.train.labels.size());
}

TEST(CoTraining, SeparableDataReachesPerfectValidationAuc) {
  const auto& trace = shared_run().result.cotrain.trace;
  ASSERT_GE(trace.size(), 2u);
  bool perfect = false;
  for (std::size_t t = 0; t < std::min<std::size_t>(trace.size(), 4); ++t) {
    perfect = perfect || trace[t].rf_val_auc == 1.0;
  }
  EXPECT_TRUE(perfect);
}

TEST(CoTraining, NoTestRowsReachAnyFittingStage) {
  const auto& audit = shared_run().audit;
  EXPECT_EQ(audit.test_rows_seen(), 0u);
  for (const char* stage : {"vocabulary", "numeric_scaler", "reward", "forest_fit"}) {
    EXPECT_GT(audit.count(stage, SplitTag::kTrain), 0u) << stage;
    EXPECT_EQ(audit.count(stage, SplitTag::kValidation), 0u) << stage;
  }
  for (const auto& [stage, counts] : audit.stages()) {
    EXPECT_EQ(counts[static_cast<std::size_t>(SplitTag::kTest)], 0u) << stage;
    EXPECT_EQ(counts[static_cast<std::size_t>(SplitTag::kValidation)], 0u) << stage;
  }
}

TEST(CoTraining, PhasesKeepTheOtherModelFrozen) {
  for (const auto& r : shared_run().result.cotrain.trace) {
    EXPECT_TRUE(r.forest_frozen_during_policy_phase) << r.iteration;
    EXPECT_TRUE(r.policy_frozen_during_forest_phase) << r.iteration;
  }
}

TEST(CoTraining, TraceStartsAtBaselinesAndIsConsecutive) {
  const auto& r = shared_run().result;
  const auto& trace = r.cotrain.trace;
  EXPECT_EQ(trace[0].iteration, 0u);
  EXPECT_EQ(trace[0].rf_test_auc, r.baselines.rf.test_auc);
  EXPECT_EQ(trace[0].llm_test_auc, r.baselines.llm.test_auc);
  for (std::size_t t = 0; t < trace.size(); ++t) EXPECT_EQ(trace[t].iteration, t);
  EXPECT_EQ(r.cotrain.stop_iteration + 1, trace.size());
}

TEST(CoTraining, BestCheckpointsMatchTrace) {
  const auto& c = shared_run().result.cotrain;
  double best_llm = -1, best_rf = -1;
  for (const auto& row : c.trace) {
    best_llm = std::max(best_llm, row.llm_val_auc);
    best_rf = std::max(best_rf, row.rf_val_auc);
  }
  EXPECT_NEAR(c.best_policy_scores.validation_auc, best_llm, 1e-4);
  EXPECT_NEAR(c.best_forest_scores.validation_auc, best_rf, 1e-4);
  EXPECT_EQ(c.trace[c.best_policy_iteration].llm_val_auc, c.best_policy_scores.validation_auc);
  EXPECT_EQ(c.trace[c.best_forest_iteration].rf_val_auc, c.best_forest_scores.validation_auc);
}

// Replays the stopping rule on a trace: either model improving its best
// validation AUC by more than the tolerance resets the counter.
std::size_t last_improvement(const std::vector<IterationRecord>& trace, double tol) {
  double best_llm = trace[0].llm_val_auc, best_rf = trace[0].rf_val_auc;
  std::size_t last = 0;
  for (std::size_t t = 1; t < trace.size(); ++t) {
    bool improved = false;
    if (trace[t].llm_val_auc > best_llm + tol) {
      best_llm = trace[t].llm_val_auc;
      improved = true;
    }
    if (trace[t].rf_val_auc > best_rf + tol) {
      best_rf = trace[t].rf_val_auc;
      improved = true;
    }
    if (improved) last = t;
  }
  return last;
}

TEST(CoTraining, PatienceStopsExactlyAfterPStaleIterations) {
  auto config = small_config(5);
  config.max_outer_iterations = 12;
  config.patience = 2;
  const auto data = prepare_data(toy_dataset(60, 2), config);
  const auto r = run_experiment(data, config).cotrain;
  const auto last = last_improvement(r.trace, config.improvement_tolerance);
  if (r.stop_reason == "patience") {
    EXPECT_EQ(r.stop_iteration - last, config.patience);
  } else {
    EXPECT_EQ(r.stop_reason, "max_iterations");
    EXPECT_EQ(r.stop_iteration, config.max_outer_iterations);
    EXPECT_LT(r.stop_iteration - last, config.patience);
  }
}

TEST(CoTraining, SinglePassRunsOneIteration) {
  auto config = small_config();
  config.scheme = TrainingScheme::kSinglePass;
  const auto data = prepare_data(toy_dataset(60, 3), config);
  const auto r = run_experiment(data, config).cotrain;
  EXPECT_EQ(r.trace.size(), 2u);
  EXPECT_EQ(r.stop_reason, "single_pass");
}

TEST(CoTraining, ReproducibleTraceBytes) {
  const auto run = [] {
    const auto config = small_config(9);
    const auto data = prepare_data(toy_dataset(60, 4), config);
    const auto r = run_experiment(data, config);
    return format_trace(r.cotrain.trace);
  };
  EXPECT_EQ(run(), run());
}

TEST(CoTraining, AugmentedFeaturesShape) {
  const auto& f = shared_run();
  const auto& c = f.result.cotrain;
  const auto X = augmented_features(c.best_forest_embedder, c.best_forest_pca,
                                    f.data.test.features, f.data.test.tokens);
  const auto extra = c.best_forest_pca ? c.best_forest_pca->output_dim() : 0;
  EXPECT_EQ(static_cast<std::size_t>(X.rows()), f.data.test.labels.size());
  EXPECT_EQ(static_cast<std::size_t>(X.cols()), c.best_forest.n_features());
  EXPECT_EQ(static_cast<std::size_t>(X.cols()), f.data.test.features.values.cols() + extra);
}

TEST(Ablation, RewardModes) {
  EXPECT_EQ(lambda_for_reward_mode("hybrid"), 0.5);
  EXPECT_EQ(lambda_for_reward_mode("rf_only"), 0.0);
  EXPECT_EQ(lambda_for_reward_mode("task_only"), 1.0);
  EXPECT_THROW(lambda_for_reward_mode("other"), std::invalid_argument);
}

TEST(Ablation, EmptyGridGivesBaseRowOnly) {
  const auto& f = shared_run();
  const auto rows = run_ablation_grid(f.data, f.config, {});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_TRUE(rows[0].is_base);
  EXPECT_EQ(rows[0].llm_delta, 0.0);
  EXPECT_EQ(rows[0].rf_test_auc, f.result.cotrain.best_forest_scores.test_auc);
}

TEST(Ablation, OneAxisAtATime) {
  const auto& f = shared_run();
  AblationGrid grid;
  grid.pca_k = {2, 1};
  grid.schemes = {TrainingScheme::kSinglePass};
  const auto rows = run_ablation_grid(f.data, f.config, grid);
  ASSERT_EQ(rows.size(), 4u);
  // The variant equal to the base value reproduces the base run.
  for (const auto& r : rows) {
    if (r.component == "PCA dimension" && r.variant == "2") {
      EXPECT_EQ(r.llm_test_auc, rows[0].llm_test_auc);
      EXPECT_EQ(r.rf_delta, 0.0);
    }
    EXPECT_NEAR(r.llm_delta, r.llm_test_auc - rows[0].llm_test_auc, 1e-15);
  }
}

TEST(CoTrainConfig, Validation) {
  auto c = small_config();
  EXPECT_NO_THROW(c.validate());
  c.patience = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config();
  c.reward.lambda = 2;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Parsing, SchemesAndAlgorithms) {
  EXPECT_EQ(parse_scheme("single_pass"), TrainingScheme::kSinglePass);
  EXPECT_EQ(parse_algorithm(to_string(PolicyAlgorithm::kReinforce)), PolicyAlgorithm::kReinforce);
  EXPECT_THROW(parse_scheme("sometimes"), std::invalid_argument);
}

}  // namespace
}  // namespace rct
