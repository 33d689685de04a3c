#ifndef RCT_COTRAIN_H_
#define RCT_COTRAIN_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rct/data_ingest.h"
#include "rct/embedding_fusion.h"
#include "rct/encoder_policy.h"
#include "rct/ppo_trainer.h"
#include "rct/random_forest.h"
#include "rct/reward.h"
#include "rct/tokenizer.h"

namespace rct {

enum class TrainingScheme { kIterative, kSinglePass };
enum class PolicyAlgorithm { kPPO, kReinforce };

std::string_view to_string(TrainingScheme scheme);
std::string_view to_string(PolicyAlgorithm algorithm);
TrainingScheme parse_scheme(std::string_view text);
PolicyAlgorithm parse_algorithm(std::string_view text);

struct SeedConfig {
  std::uint64_t master = 0;
  std::uint64_t split = 0;
  std::uint64_t policy_init = 0;
  std::uint64_t forest = 0;
  std::uint64_t sampling = 0;

  static SeedConfig from_master(std::uint64_t master);
};

struct DataConfig {
  double test_fraction = 0.2;
  double validation_fraction = 0.1;  // carved from the training part
  double sparse_threshold = 0.5;
  std::size_t vocab_min_count = 1;
};

struct CoTrainConfig {
  std::size_t max_outer_iterations = 30;
  std::size_t inner_ppo_rounds = 8;
  // PPO rounds for the standalone policy; 0 means inner_ppo_rounds.
  std::size_t baseline_ppo_rounds = 0;
  std::size_t patience = 5;
  std::size_t pca_k = 5;
  double improvement_tolerance = 1e-4;
  double target_recall = 0.80;
  TrainingScheme scheme = TrainingScheme::kIterative;
  PolicyAlgorithm algorithm = PolicyAlgorithm::kPPO;

  DataConfig data;
  RewardConfig reward;
  PPOConfig ppo;
  RFConfig rf;
  // vocab_size is filled in from the training vocabulary; max_len 0 sizes the
  // input to the longest training card.
  EncoderConfig encoder;
  SeedConfig seeds = SeedConfig::from_master(0);

  std::size_t baseline_rounds() const {
    return baseline_ppo_rounds == 0 ? inner_ppo_rounds : baseline_ppo_rounds;
  }
  void validate() const;
};

// Per fitting stage, how many rows of each split tag were consumed.
class ProvenanceAudit {
 public:
  void record(std::string_view stage, std::span<const SplitTag> tags);
  std::size_t count(std::string_view stage, SplitTag tag) const;
  const std::map<std::string, std::array<std::size_t, 4>, std::less<>>& stages() const {
    return counts_;
  }
  // Total test rows seen by any stage.
  std::size_t test_rows_seen() const;

 private:
  std::map<std::string, std::array<std::size_t, 4>, std::less<>> counts_;
};

struct SplitData {
  TabularDataset rows;
  EncodedMatrix features;
  std::vector<PatientCard> cards;
  std::vector<TokenizedCard> tokens;
  std::vector<int> labels;
  std::vector<SplitTag> tags;
};

struct PreparedData {
  SplitData train, validation, test;
  OneHotEncoder encoder;
  Vocabulary vocab;
  std::size_t max_len = 0;
  std::vector<std::string> removed_features;
};

// Split, sparse-feature filter, one-hot encoding, cards, vocabulary and
// tokenization, with every fitted piece drawn from the training rows.
PreparedData prepare_data(const TabularDataset& raw, const CoTrainConfig& config,
                          ProvenanceAudit* audit = nullptr);

struct ModelScores {
  std::vector<double> validation;
  std::vector<double> test;
  double validation_auc = 0.0;
  double test_auc = 0.0;
};

struct BaselineResult {
  Forest forest;
  EncoderPolicy policy;
  ModelScores rf;
  ModelScores llm;
  double mean_reward = 0.0;
};

BaselineResult run_baselines(const PreparedData& data, const CoTrainConfig& config,
                             ProvenanceAudit* audit = nullptr);

struct IterationRecord {
  std::size_t iteration = 0;
  double llm_val_auc = 0.0;
  double rf_val_auc = 0.0;
  double llm_test_auc = 0.0;
  double rf_test_auc = 0.0;
  double mean_ppo_reward = 0.0;
  double seconds = 0.0;  // wall clock, kept out of the trace file
  bool forest_frozen_during_policy_phase = true;
  bool policy_frozen_during_forest_phase = true;
};

struct PPORoundLog {
  std::size_t iteration = 0;
  std::size_t round = 0;
  BatchStats stats;
};

struct CoTrainResult {
  EncoderPolicy best_policy;
  std::size_t best_policy_iteration = 0;
  ModelScores best_policy_scores;

  // The best forest together with the embedder and projection that produced
  // its extra columns (no projection when the best forest is the baseline).
  Forest best_forest;
  EncoderPolicy best_forest_embedder;
  std::optional<PCAModel> best_forest_pca;
  std::size_t best_forest_iteration = 0;
  ModelScores best_forest_scores;

  std::vector<IterationRecord> trace;
  std::vector<PPORoundLog> ppo_log;
  std::size_t stop_iteration = 0;
  std::string stop_reason;
};

// Observer for progress and partial results; every member is optional.
struct RunHooks {
  std::function<void(const CoTrainResult&)> on_iteration;
};

CoTrainResult run_cotraining(const PreparedData& data, const CoTrainConfig& config,
                             const BaselineResult& baselines,
                             ProvenanceAudit* audit = nullptr, const RunHooks& hooks = {});

// Scores of the forest from a co-training result on validation/test rows.
Eigen::MatrixXd augmented_features(const EncoderPolicy& embedder,
                                   const std::optional<PCAModel>& pca,
                                   const EncodedMatrix& tabular,
                                   std::span<const TokenizedCard> cards);

struct ExperimentResult {
  BaselineResult baselines;
  CoTrainResult cotrain;
};

ExperimentResult run_experiment(const PreparedData& data, const CoTrainConfig& config,
                                ProvenanceAudit* audit = nullptr, const RunHooks& hooks = {});

struct AblationGrid {
  std::vector<TrainingScheme> schemes;
  std::vector<PolicyAlgorithm> algorithms;
  std::vector<std::string> rewards;  // hybrid | rf_only | task_only
  std::vector<double> entropy;
  std::vector<std::size_t> pca_k;

  bool empty() const {
    return schemes.empty() && algorithms.empty() && rewards.empty() && entropy.empty() &&
           pca_k.empty();
  }
  // The full axis set: both schemes, both optimizers, three reward modes,
  // entropy 0.05/0.10 and pca_k 5/10/20.
  static AblationGrid standard();
};

double lambda_for_reward_mode(std::string_view mode);

struct AblationRow {
  std::string component;
  std::string variant;
  bool is_base = false;
  double llm_test_auc = 0.0;
  double rf_test_auc = 0.0;
  double llm_delta = 0.0;
  double rf_delta = 0.0;
  std::size_t stop_iteration = 0;
};

// One run per axis value with every other setting taken from `base`; the
// base run comes first and deltas are measured against it.
std::vector<AblationRow> run_ablation_grid(const PreparedData& data, const CoTrainConfig& base,
                                           const AblationGrid& grid);

}  // namespace rct

#endif  // RCT_COTRAIN_H_
