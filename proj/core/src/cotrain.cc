#include "rct/cotrain.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <stdexcept>
#include <utility>

#include "rct/metrics.h"
#include "rct/rng.h"

namespace rct {
namespace {

double auc_of(const std::vector<double>& scores, const std::vector<int>& labels) {
  return roc_auc(ScoredSet(scores, labels));
}

ModelScores score_policy(const EncoderPolicy& policy, const PreparedData& data) {
  ModelScores s;
  s.validation = policy.predict_all(data.validation.tokens);
  s.test = policy.predict_all(data.test.tokens);
  s.validation_auc = auc_of(s.validation, data.validation.labels);
  s.test_auc = auc_of(s.test, data.test.labels);
  return s;
}

ModelScores score_forest(const Forest& forest, const Eigen::MatrixXd& x_val,
                         const Eigen::MatrixXd& x_test, const PreparedData& data) {
  ModelScores s;
  s.validation = forest.predict_proba(x_val);
  s.test = forest.predict_proba(x_test);
  s.validation_auc = auc_of(s.validation, data.validation.labels);
  s.test_auc = auc_of(s.test, data.test.labels);
  return s;
}

Forest fit_training_forest(const Eigen::MatrixXd& x, const SplitData& train,
                           const CoTrainConfig& config, ProvenanceAudit* audit) {
  require_training_tags(train.tags, "forest fit");
  if (audit) audit->record("forest_fit", train.tags);
  RFConfig rf = config.rf;
  rf.seed = config.seeds.forest;
  return fit_forest(x, train.labels, rf);
}

EncoderPolicy make_policy(const PreparedData& data, const CoTrainConfig& config,
                          ProvenanceAudit* audit) {
  EncoderConfig enc = config.encoder;
  enc.vocab_size = data.vocab.size();
  enc.max_len = data.max_len;
  enc.seed = config.seeds.policy_init;
  EncoderPolicy policy(enc);
  require_training_tags(data.train.tags, "numeric scaler");
  if (audit) audit->record("numeric_scaler", data.train.tags);
  policy.fit_numeric_scaler(data.train.tokens);
  return policy;
}

struct PolicyPhase {
  double mean_reward = 0.0;
  std::vector<BatchStats> rounds;
};

PolicyPhase train_policy(EncoderPolicy& policy, Optimizer& optimizer, const PreparedData& data,
                         std::span<const double> forest_p, const RewardConfig& reward,
                         const CoTrainConfig& config, std::size_t rounds, Rng& rng,
                         ProvenanceAudit* audit) {
  PolicyPhase phase;
  const TrainingView view{data.train.tokens, data.train.labels, forest_p, data.train.tags};
  for (std::size_t r = 0; r < rounds; ++r) {
    if (audit) audit->record("reward", data.train.tags);
    const auto batch = collect_batch(policy, view, reward, config.ppo.batch_size, rng);
    const auto stats = config.algorithm == PolicyAlgorithm::kPPO
                           ? ppo_update(policy, optimizer, batch, data.train.tokens, config.ppo, rng)
                           : reinforce_update(policy, optimizer, batch, data.train.tokens,
                                              config.ppo, rng);
    phase.mean_reward += stats.mean_reward;
    phase.rounds.push_back(stats);
  }
  if (rounds > 0) phase.mean_reward /= static_cast<double>(rounds);
  return phase;
}

std::vector<double> values_of(const EncoderPolicy& policy) {
  const auto v = policy.params().values();
  return {v.begin(), v.end()};
}

}  // namespace

std::string_view to_string(TrainingScheme scheme) {
  return scheme == TrainingScheme::kIterative ? "iterative" : "single_pass";
}

std::string_view to_string(PolicyAlgorithm algorithm) {
  return algorithm == PolicyAlgorithm::kPPO ? "ppo" : "reinforce";
}

TrainingScheme parse_scheme(std::string_view text) {
  if (text == "iterative") return TrainingScheme::kIterative;
  if (text == "single_pass") return TrainingScheme::kSinglePass;
  throw std::invalid_argument("unknown training scheme '" + std::string(text) + "'");
}

PolicyAlgorithm parse_algorithm(std::string_view text) {
  if (text == "ppo") return PolicyAlgorithm::kPPO;
  if (text == "reinforce") return PolicyAlgorithm::kReinforce;
  throw std::invalid_argument("unknown policy optimizer '" + std::string(text) + "'");
}

SeedConfig SeedConfig::from_master(std::uint64_t master) {
  return {master, derive_seed(master, 1), derive_seed(master, 2), derive_seed(master, 3),
          derive_seed(master, 4)};
}

void CoTrainConfig::validate() const {
  if (max_outer_iterations < 1) throw std::invalid_argument("max_outer_iterations must be >= 1");
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (!(target_recall > 0.0 && target_recall <= 1.0)) {
    throw std::invalid_argument("target recall must lie in (0, 1]");
  }
  if (improvement_tolerance < 0.0) throw std::invalid_argument("tolerance must be >= 0");
  reward.validate();
  ppo.validate();
  rf.validate();
}

void ProvenanceAudit::record(std::string_view stage, std::span<const SplitTag> tags) {
  auto it = counts_.find(stage);
  if (it == counts_.end()) it = counts_.emplace(std::string(stage), std::array<std::size_t, 4>{}).first;
  for (auto t : tags) ++it->second[static_cast<std::size_t>(t)];
}

std::size_t ProvenanceAudit::count(std::string_view stage, SplitTag tag) const {
  const auto it = counts_.find(stage);
  return it == counts_.end() ? 0 : it->second[static_cast<std::size_t>(tag)];
}

std::size_t ProvenanceAudit::test_rows_seen() const {
  std::size_t n = 0;
  for (const auto& [stage, c] : counts_) n += c[static_cast<std::size_t>(SplitTag::kTest)];
  return n;
}

PreparedData prepare_data(const TabularDataset& raw, const CoTrainConfig& config,
                          ProvenanceAudit* audit) {
  raw.validate();
  auto [train_full, test] = split(raw, 1.0 - config.data.test_fraction, config.seeds.split);
  auto [train, validation] =
      carve_validation(train_full, config.data.validation_fraction, config.seeds.split);

  require_training_rows(train, "sparse feature filter");
  const auto filter = fit_sparse_filter(train, config.data.sparse_threshold);
  train = filter.apply(train);
  validation = filter.apply(validation);
  test = filter.apply(test);

  PreparedData out;
  out.removed_features = filter.removed;
  out.encoder = OneHotEncoder::fit(train);
  const auto& schema = out.encoder.schema();
  train = with_schema(std::move(train), schema);
  validation = with_schema(std::move(validation), schema);
  test = with_schema(std::move(test), schema);

  auto fill = [&](SplitData& s, TabularDataset ds) {
    s.features = out.encoder.transform(ds);
    s.cards = to_patient_cards(ds);
    s.labels = ds.labels();
    s.tags.reserve(ds.size());
    for (const auto& r : ds.rows) s.tags.push_back(r.tag);
    s.rows = std::move(ds);
  };
  fill(out.train, std::move(train));
  fill(out.validation, std::move(validation));
  fill(out.test, std::move(test));

  require_training_tags(out.train.tags, "vocabulary");
  if (audit) audit->record("vocabulary", out.train.tags);
  out.vocab = Vocabulary::build(out.train.cards, config.data.vocab_min_count);

  out.max_len = config.encoder.max_len;
  if (out.max_len == 0) {
    for (const auto& card : out.train.cards) {
      out.max_len = std::max(out.max_len, split_words(card.text).size() + 2);
    }
  }
  out.train.tokens = tokenize_all(out.vocab, out.train.cards, out.max_len);
  out.validation.tokens = tokenize_all(out.vocab, out.validation.cards, out.max_len);
  out.test.tokens = tokenize_all(out.vocab, out.test.cards, out.max_len);
  return out;
}

BaselineResult run_baselines(const PreparedData& data, const CoTrainConfig& config,
                             ProvenanceAudit* audit) {
  config.validate();
  BaselineResult result;
  result.forest = fit_training_forest(data.train.features.values, data.train, config, audit);
  result.rf = score_forest(result.forest, data.validation.features.values,
                           data.test.features.values, data);

  result.policy = make_policy(data, config, audit);
  RewardConfig task_only = config.reward;
  task_only.lambda = 1.0;
  Optimizer optimizer(config.ppo, result.policy.params().size());
  Rng rng(derive_seed(config.seeds.sampling, 0));
  const auto phase = train_policy(result.policy, optimizer, data, {}, task_only, config,
                                  config.baseline_rounds(), rng, audit);
  result.mean_reward = phase.mean_reward;
  result.llm = score_policy(result.policy, data);
  return result;
}

Eigen::MatrixXd augmented_features(const EncoderPolicy& embedder,
                                   const std::optional<PCAModel>& pca,
                                   const EncodedMatrix& tabular,
                                   std::span<const TokenizedCard> cards) {
  if (!pca) return tabular.values;
  return augment(tabular.values, transform(*pca, embedder.embed_all(cards)),
                 tabular.column_names)
      .values;
}

CoTrainResult run_cotraining(const PreparedData& data, const CoTrainConfig& config,
                             const BaselineResult& baselines, ProvenanceAudit* audit,
                             const RunHooks& hooks) {
  config.validate();
  CoTrainResult result;
  EncoderPolicy policy = baselines.policy;
  Forest forest = baselines.forest;
  Eigen::MatrixXd x_train = data.train.features.values;

  result.best_policy = policy;
  result.best_policy_scores = baselines.llm;
  result.best_forest = forest;
  result.best_forest_embedder = policy;
  result.best_forest_scores = baselines.rf;

  IterationRecord row0;
  row0.llm_val_auc = baselines.llm.validation_auc;
  row0.rf_val_auc = baselines.rf.validation_auc;
  row0.llm_test_auc = baselines.llm.test_auc;
  row0.rf_test_auc = baselines.rf.test_auc;
  row0.mean_ppo_reward = baselines.mean_reward;
  result.trace.push_back(row0);
  if (hooks.on_iteration) hooks.on_iteration(result);

  Optimizer optimizer(config.ppo, policy.params().size());
  Rng rng(derive_seed(config.seeds.sampling, 1));
  std::size_t last_improvement = 0;
  result.stop_reason = "max_iterations";
  const std::size_t last_iteration =
      config.scheme == TrainingScheme::kSinglePass ? 1 : config.max_outer_iterations;

  for (std::size_t t = 1; t <= last_iteration; ++t) {
    const auto started = std::chrono::steady_clock::now();
    IterationRecord rec;
    rec.iteration = t;

    // Policy phase against the frozen forest.
    const std::string forest_before = forest.serialize();
    const auto forest_p = forest.predict_proba(x_train);
    const auto phase = train_policy(policy, optimizer, data, forest_p, config.reward, config,
                                    config.inner_ppo_rounds, rng, audit);
    rec.mean_ppo_reward = phase.mean_reward;
    rec.forest_frozen_during_policy_phase = forest.serialize() == forest_before;
    for (std::size_t r = 0; r < phase.rounds.size(); ++r) {
      result.ppo_log.push_back({t, r + 1, phase.rounds[r]});
    }

    // Forest phase against the frozen policy.
    const auto policy_before = values_of(policy);
    std::optional<PCAModel> pca;
    if (config.pca_k > 0) {
      require_training_tags(data.train.tags, "embedding projection");
      if (audit) audit->record("pca_fit", data.train.tags);
      const Eigen::MatrixXd h_train = policy.embed_all(data.train.tokens);
      pca = fit_pca(h_train, config.pca_k);
      x_train = augment(data.train.features.values, transform(*pca, h_train),
                        data.train.features.column_names)
                    .values;
    }
    forest = fit_training_forest(x_train, data.train, config, audit);
    const auto x_val = augmented_features(policy, pca, data.validation.features,
                                          data.validation.tokens);
    const auto x_test = augmented_features(policy, pca, data.test.features, data.test.tokens);
    rec.policy_frozen_during_forest_phase = values_of(policy) == policy_before;

    const auto rf_scores = score_forest(forest, x_val, x_test, data);
    const auto llm_scores = score_policy(policy, data);
    rec.rf_val_auc = rf_scores.validation_auc;
    rec.rf_test_auc = rf_scores.test_auc;
    rec.llm_val_auc = llm_scores.validation_auc;
    rec.llm_test_auc = llm_scores.test_auc;

    bool improved = false;
    if (llm_scores.validation_auc > result.best_policy_scores.validation_auc +
                                        config.improvement_tolerance) {
      result.best_policy = policy;
      result.best_policy_iteration = t;
      result.best_policy_scores = llm_scores;
      improved = true;
    }
    if (rf_scores.validation_auc > result.best_forest_scores.validation_auc +
                                       config.improvement_tolerance) {
      result.best_forest = forest;
      result.best_forest_embedder = policy;
      result.best_forest_pca = pca;
      result.best_forest_iteration = t;
      result.best_forest_scores = rf_scores;
      improved = true;
    }
    if (improved) last_improvement = t;

    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.trace.push_back(rec);
    result.stop_iteration = t;
    if (hooks.on_iteration) hooks.on_iteration(result);

    if (config.scheme == TrainingScheme::kSinglePass) {
      result.stop_reason = "single_pass";
      break;
    }
    if (t - last_improvement >= config.patience) {
      result.stop_reason = "patience";
      break;
    }
  }
  return result;
}

ExperimentResult run_experiment(const PreparedData& data, const CoTrainConfig& config,
                                ProvenanceAudit* audit, const RunHooks& hooks) {
  ExperimentResult out;
  out.baselines = run_baselines(data, config, audit);
  out.cotrain = run_cotraining(data, config, out.baselines, audit, hooks);
  return out;
}

AblationGrid AblationGrid::standard() {
  AblationGrid g;
  g.schemes = {TrainingScheme::kIterative, TrainingScheme::kSinglePass};
  g.algorithms = {PolicyAlgorithm::kPPO, PolicyAlgorithm::kReinforce};
  g.rewards = {"hybrid", "rf_only", "task_only"};
  g.entropy = {0.05, 0.10};
  g.pca_k = {5, 10, 20};
  return g;
}

double lambda_for_reward_mode(std::string_view mode) {
  if (mode == "hybrid") return 0.5;
  if (mode == "rf_only") return 0.0;
  if (mode == "task_only") return 1.0;
  throw std::invalid_argument("unknown reward mode '" + std::string(mode) + "'");
}

namespace {

std::string reward_label(std::string_view mode) {
  if (mode == "hybrid") return "Hybrid";
  if (mode == "rf_only") return "RF reward only";
  return "Task reward only";
}

}  // namespace

std::vector<AblationRow> run_ablation_grid(const PreparedData& data, const CoTrainConfig& base,
                                           const AblationGrid& grid) {
  // Baseline policies only depend on the optimizer and the entropy weight.
  std::map<std::pair<int, double>, BaselineResult> baseline_cache;
  auto run = [&](const CoTrainConfig& cfg) {
    const std::pair<int, double> key{static_cast<int>(cfg.algorithm), cfg.ppo.entropy_coef};
    auto it = baseline_cache.find(key);
    if (it == baseline_cache.end()) it = baseline_cache.emplace(key, run_baselines(data, cfg)).first;
    return run_cotraining(data, cfg, it->second);
  };

  const auto base_result = run(base);
  std::vector<AblationRow> rows;
  AblationRow base_row;
  base_row.component = "Full RCT";
  base_row.variant = "base";
  base_row.is_base = true;
  base_row.llm_test_auc = base_result.best_policy_scores.test_auc;
  base_row.rf_test_auc = base_result.best_forest_scores.test_auc;
  base_row.stop_iteration = base_result.stop_iteration;
  rows.push_back(base_row);

  auto add = [&](std::string component, std::string variant, const CoTrainConfig& cfg,
                 bool same_as_base) {
    AblationRow row;
    row.component = std::move(component);
    row.variant = std::move(variant);
    row.is_base = same_as_base;
    if (same_as_base) {
      row.llm_test_auc = base_row.llm_test_auc;
      row.rf_test_auc = base_row.rf_test_auc;
      row.stop_iteration = base_row.stop_iteration;
    } else {
      const auto r = run(cfg);
      row.llm_test_auc = r.best_policy_scores.test_auc;
      row.rf_test_auc = r.best_forest_scores.test_auc;
      row.stop_iteration = r.stop_iteration;
    }
    row.llm_delta = row.llm_test_auc - base_row.llm_test_auc;
    row.rf_delta = row.rf_test_auc - base_row.rf_test_auc;
    rows.push_back(row);
  };

  for (auto scheme : grid.schemes) {
    CoTrainConfig cfg = base;
    cfg.scheme = scheme;
    add("Training Scheme", scheme == TrainingScheme::kIterative ? "Iterative" : "Single-pass",
        cfg, scheme == base.scheme);
  }
  for (auto algorithm : grid.algorithms) {
    CoTrainConfig cfg = base;
    cfg.algorithm = algorithm;
    add("Optimization", algorithm == PolicyAlgorithm::kPPO ? "PPO" : "REINFORCE", cfg,
        algorithm == base.algorithm);
  }
  for (const auto& mode : grid.rewards) {
    CoTrainConfig cfg = base;
    cfg.reward.lambda = lambda_for_reward_mode(mode);
    add("Reward", reward_label(mode), cfg, cfg.reward.lambda == base.reward.lambda);
  }
  for (double beta : grid.entropy) {
    CoTrainConfig cfg = base;
    cfg.ppo.entropy_coef = beta;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", beta);
    add("Entropy", buf, cfg, beta == base.ppo.entropy_coef);
  }
  for (auto k : grid.pca_k) {
    CoTrainConfig cfg = base;
    cfg.pca_k = k;
    add("PCA dimension", std::to_string(k), cfg, k == base.pca_k);
  }
  return rows;
}

}  // namespace rct
