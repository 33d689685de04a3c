#include "rct/reward.h"

#include <algorithm>
#include <stdexcept>

namespace rct {

void RewardConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("reward lambda must lie in [0, 1]");
  }
  if (!(r_false_negative <= 0.0 && r_false_positive <= 0.0 && r_correct >= 0.0)) {
    throw std::invalid_argument("penalties must be <= 0 <= r_correct");
  }
  if (!(-r_false_negative > -r_false_positive)) {
    throw std::invalid_argument("false negatives must cost more than false positives");
  }
  if (!(positive_oversample_weight > 0.0)) {
    throw std::invalid_argument("positive oversampling weight must be positive");
  }
}

double rf_evaluation(double p_positive, int action) {
  if (!(p_positive >= 0.0 && p_positive <= 1.0)) {
    throw std::invalid_argument("forest probability outside [0, 1]");
  }
  return action == 1 ? p_positive : 1.0 - p_positive;
}

double task_reward(int action, int label, const RewardConfig& config) {
  if (config.indicator_task_reward) return action == label ? 1.0 : 0.0;
  if (action == label) return config.r_correct;
  return action == 0 ? config.r_false_negative : config.r_false_positive;
}

double hybrid_reward(double r_task, double q, double lambda) {
  return lambda * r_task + (1.0 - lambda) * q;
}

double reward(int action, int label, double p_positive, const RewardConfig& config) {
  return hybrid_reward(task_reward(action, label, config),
                       rf_evaluation(p_positive, action), config.lambda);
}

RewardBounds reward_bounds(const RewardConfig& config) {
  double lo_task = std::min({config.r_correct, config.r_false_negative,
                             config.r_false_positive});
  double hi_task = std::max({config.r_correct, config.r_false_negative,
                             config.r_false_positive});
  if (config.indicator_task_reward) {
    lo_task = 0.0;
    hi_task = 1.0;
  }
  return {config.lambda * lo_task, config.lambda * hi_task + (1.0 - config.lambda)};
}

}  // namespace rct
