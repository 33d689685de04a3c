#ifndef RCT_PPO_TRAINER_H_
#define RCT_PPO_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rct/data_ingest.h"
#include "rct/encoder_policy.h"
#include "rct/reward.h"
#include "rct/rng.h"

namespace rct {

// One single-step episode: a card, the sampled action and its reward.
struct Experience {
  std::size_t row = 0;  // index into the training cards
  int action = 0;
  int label = 0;
  double q = 0.5;  // forest evaluation of the action
  double reward = 0.0;
  double old_log_prob = 0.0;
  double old_value = 0.0;
};

enum class OptimizerKind { kSgd, kAdam };

struct PPOConfig {
  double clip_epsilon = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.05;
  double learning_rate = 3e-4;
  std::size_t inner_epochs = 4;
  std::size_t minibatch_size = 64;
  std::size_t batch_size = 256;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  bool normalize_advantage = false;
  std::uint64_t seed = 0;

  void validate() const;
};

// Applies updates only where the policy's trainable mask is set.
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(const PPOConfig& config, std::size_t n_params);

  void step(ParameterSet& params, std::span<const double> grad);
  std::size_t steps() const { return steps_; }

 private:
  OptimizerKind kind_ = OptimizerKind::kAdam;
  double lr_ = 0.0, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::vector<double> m_, v_;
  std::size_t steps_ = 0;
};

// Training rows seen by the reward loop. forest_p holds the frozen forest's
// p(y=1) per row; when empty every row gets 0.5. tags, when present, must all
// be kTrain.
struct TrainingView {
  std::span<const TokenizedCard> cards;
  std::span<const int> labels;
  std::span<const double> forest_p;
  std::span<const SplitTag> tags;
};

// Draws batch_size rows with replacement, positives weighted by
// positive_oversample_weight; samples an action from the policy for each and
// scores it with the hybrid reward.
std::vector<Experience> collect_batch(const EncoderPolicy& policy, const TrainingView& data,
                                      const RewardConfig& reward_config,
                                      std::size_t batch_size, Rng& rng);

// A = R - V_old(x); single-step episodes have no bootstrapping.
double compute_advantage(const Experience& e);
std::vector<double> compute_advantages(std::span<const Experience> batch, bool normalize);

struct LossTerms {
  double total = 0.0;
  double policy = 0.0;   // mean negative surrogate
  double value = 0.0;    // mean (V - R)^2
  double entropy = 0.0;  // mean policy entropy
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
};

// Mean over the minibatch of
//   -min(r A, clip(r, 1-eps, 1+eps) A) + c1 (V - R)^2 - c2 H(pi).
// Adds the gradient into `grad` (which must be params().size() long).
LossTerms ppo_loss(const EncoderPolicy& policy, std::span<const Experience> minibatch,
                   std::span<const double> advantages, std::span<const TokenizedCard> cards,
                   const PPOConfig& config, std::span<double> grad);

// Mean of -R log pi(a|x) + c1 (V - R)^2 - c2 H(pi).
LossTerms reinforce_loss(const EncoderPolicy& policy, std::span<const Experience> minibatch,
                         std::span<const TokenizedCard> cards, const PPOConfig& config,
                         std::span<double> grad);

struct BatchStats {
  double mean_reward = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double entropy = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double total_loss = 0.0;
  std::size_t updates = 0;
};

// K epochs of shuffled minibatches against the log-probs stored at
// collection time.
BatchStats ppo_update(EncoderPolicy& policy, Optimizer& optimizer,
                      std::span<const Experience> batch, std::span<const TokenizedCard> cards,
                      const PPOConfig& config, Rng& rng);

// One pass of plain policy gradient over shuffled minibatches.
BatchStats reinforce_update(EncoderPolicy& policy, Optimizer& optimizer,
                            std::span<const Experience> batch,
                            std::span<const TokenizedCard> cards, const PPOConfig& config,
                            Rng& rng);

}  // namespace rct

#endif  // RCT_PPO_TRAINER_H_
