#ifndef RCT_REWARD_H_
#define RCT_REWARD_H_

namespace rct {

struct RewardConfig {
  double lambda = 0.5;
  double r_correct = 1.0;
  double r_false_negative = -1.5;
  double r_false_positive = -0.2;
  // Sampling-probability multiplier for positive rows in PPO batches.
  double positive_oversample_weight = 1.5;
  // When true the task reward is the plain indicator 1[a == y].
  bool indicator_task_reward = false;

  // Throws std::invalid_argument when the sign and ordering constraints do
  // not hold.
  void validate() const;
};

struct RewardBounds {
  double lower = 0.0;
  double upper = 0.0;
};

// Q(x, a): forest probability that the chosen action is correct.
double rf_evaluation(double p_positive, int action);

double task_reward(int action, int label, const RewardConfig& config);

// lambda * r_task + (1 - lambda) * q
double hybrid_reward(double r_task, double q, double lambda);

double reward(int action, int label, double p_positive, const RewardConfig& config);

// Range of reward() over all actions, labels and probabilities.
RewardBounds reward_bounds(const RewardConfig& config);

}  // namespace rct

#endif  // RCT_REWARD_H_
