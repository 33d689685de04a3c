#include "rct/reward.h"

#include <stdexcept>

#include <gtest/gtest.h>

namespace rct {
namespace {

TEST(Reward, RfEvaluationBranches) {
  EXPECT_DOUBLE_EQ(rf_evaluation(0.7, 1), 0.7);
  EXPECT_DOUBLE_EQ(rf_evaluation(0.7, 0), 1.0 - 0.7);
  EXPECT_DOUBLE_EQ(rf_evaluation(0.5, 0), rf_evaluation(0.5, 1));
  for (double p : {0.0, 0.13, 0.5, 0.77, 1.0}) {
    EXPECT_EQ(rf_evaluation(p, 0) + rf_evaluation(p, 1), 1.0);
  }
  EXPECT_THROW(rf_evaluation(1.2, 1), std::invalid_argument);
  EXPECT_THROW(rf_evaluation(-0.1, 0), std::invalid_argument);
}

TEST(Reward, TaskRewardTable) {
  const RewardConfig c;
  EXPECT_DOUBLE_EQ(task_reward(1, 1, c), 1.0);
  EXPECT_DOUBLE_EQ(task_reward(0, 0, c), 1.0);
  EXPECT_DOUBLE_EQ(task_reward(0, 1, c), -1.5);
  EXPECT_DOUBLE_EQ(task_reward(1, 0, c), -0.2);
  RewardConfig indicator;
  indicator.indicator_task_reward = true;
  EXPECT_DOUBLE_EQ(task_reward(0, 1, indicator), 0.0);
  EXPECT_DOUBLE_EQ(task_reward(1, 1, indicator), 1.0);
}

TEST(Reward, HybridEndpointsAndArithmetic) {
  for (double r : {-1.5, -0.2, 1.0}) {
    for (double q : {0.0, 0.3, 1.0}) {
      EXPECT_EQ(hybrid_reward(r, q, 1.0), r);
      EXPECT_EQ(hybrid_reward(r, q, 0.0), q);
    }
  }
  EXPECT_DOUBLE_EQ(hybrid_reward(1.0, 0.7, 0.5), 0.85);
}

TEST(Reward, AffineInLambdaMonotoneInQ) {
  for (double l = 0.0; l <= 1.0; l += 0.125) {
    const double mid = hybrid_reward(-1.5, 0.4, l);
    EXPECT_NEAR(mid, (1 - l) * hybrid_reward(-1.5, 0.4, 0.0) + l * hybrid_reward(-1.5, 0.4, 1.0),
                1e-15);
    EXPECT_LE(hybrid_reward(1.0, 0.2, l), hybrid_reward(1.0, 0.9, l));
  }
}

TEST(Reward, BoundsCoverEveryOutcome) {
  for (double l : {0.0, 0.25, 0.5, 1.0}) {
    RewardConfig c;
    c.lambda = l;
    const auto b = reward_bounds(c);
    EXPECT_DOUBLE_EQ(b.lower, l * -1.5);
    EXPECT_DOUBLE_EQ(b.upper, l * 1.0 + (1 - l));
    for (int a = 0; a < 2; ++a) {
      for (int y = 0; y < 2; ++y) {
        for (double p = 0.0; p <= 1.0; p += 0.1) {
          const double r = reward(a, y, p, c);
          EXPECT_GE(r, b.lower - 1e-12);
          EXPECT_LE(r, b.upper + 1e-12);
        }
      }
    }
  }
}

TEST(Reward, ConfigValidation) {
  RewardConfig c;
  EXPECT_NO_THROW(c.validate());
  c.lambda = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.r_false_negative = -0.1;  // weaker than the false-positive penalty
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.r_false_positive = 0.3;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace rct
