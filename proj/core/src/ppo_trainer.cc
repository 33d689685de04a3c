#include "rct/ppo_trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rct {
namespace {

void check_loss(double v) {
  if (!std::isfinite(v)) throw NumericError("policy loss is not finite; update aborted");
}

// d(-c2 H)/dz_j = c2 p_j (log p_j + H)
void add_entropy_grad(const std::array<double, 2>& p, double coef, double scale,
                      std::array<double, 2>& dlogits) {
  const double h = entropy2(p);
  for (std::size_t j = 0; j < 2; ++j) {
    if (p[j] > 0.0) dlogits[j] += scale * coef * p[j] * (std::log(p[j]) + h);
  }
}

double log_prob(const std::array<double, 2>& logits, int action) {
  const double m = std::max(logits[0], logits[1]);
  const double lse = m + std::log(std::exp(logits[0] - m) + std::exp(logits[1] - m));
  return logits[static_cast<std::size_t>(action)] - lse;
}

template <typename MinibatchFn>
BatchStats run_epochs(EncoderPolicy& policy, Optimizer& optimizer,
                      std::span<const Experience> batch, const PPOConfig& config,
                      std::size_t epochs, Rng& rng, MinibatchFn&& loss_fn) {
  if (batch.empty()) throw std::invalid_argument("policy update needs experiences");
  BatchStats stats;
  for (const auto& e : batch) stats.mean_reward += e.reward;
  stats.mean_reward /= static_cast<double>(batch.size());

  std::vector<std::size_t> order(batch.size());
  std::vector<double> grad(policy.params().size());
  std::vector<Experience> mb;
  std::vector<std::size_t> mb_index;
  const std::size_t mb_size = std::max<std::size_t>(1, config.minibatch_size);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += mb_size) {
      const std::size_t end = std::min(order.size(), start + mb_size);
      mb.clear();
      mb_index.clear();
      for (std::size_t i = start; i < end; ++i) {
        mb.push_back(batch[order[i]]);
        mb_index.push_back(order[i]);
      }
      std::fill(grad.begin(), grad.end(), 0.0);
      const LossTerms terms = loss_fn(std::span<const Experience>(mb),
                                      std::span<const std::size_t>(mb_index), grad);
      optimizer.step(policy.params(), grad);
      stats.mean_ratio += terms.mean_ratio;
      stats.clip_fraction += terms.clip_fraction;
      stats.entropy += terms.entropy;
      stats.policy_loss += terms.policy;
      stats.value_loss += terms.value;
      stats.total_loss += terms.total;
      ++stats.updates;
    }
  }
  const double u = static_cast<double>(stats.updates);
  stats.mean_ratio /= u;
  stats.clip_fraction /= u;
  stats.entropy /= u;
  stats.policy_loss /= u;
  stats.value_loss /= u;
  stats.total_loss /= u;
  return stats;
}

}  // namespace

void PPOConfig::validate() const {
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) {
    throw std::invalid_argument("clip epsilon must lie in (0, 1)");
  }
  if (value_coef < 0.0 || entropy_coef < 0.0) {
    throw std::invalid_argument("loss coefficients must be >= 0");
  }
  if (inner_epochs < 1 || batch_size < 1 || minibatch_size < 1) {
    throw std::invalid_argument("epochs and batch sizes must be >= 1");
  }
  if (learning_rate < 0.0) throw std::invalid_argument("learning rate must be >= 0");
}

Optimizer::Optimizer(const PPOConfig& config, std::size_t n_params)
    : kind_(config.optimizer),
      lr_(config.learning_rate),
      beta1_(config.adam_beta1),
      beta2_(config.adam_beta2),
      eps_(config.adam_epsilon) {
  if (kind_ == OptimizerKind::kAdam) {
    m_.assign(n_params, 0.0);
    v_.assign(n_params, 0.0);
  }
}

void Optimizer::step(ParameterSet& params, std::span<const double> grad) {
  auto values = params.values();
  if (grad.size() != values.size()) {
    throw std::invalid_argument("optimizer: gradient size mismatch");
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double bc1 = 1.0 - std::pow(beta1_, t);
  const double bc2 = 1.0 - std::pow(beta2_, t);
  for (const auto& tensor : params.layout()) {
    if (!tensor.trainable) continue;
    const std::size_t end = tensor.offset + tensor.size();
    if (kind_ == OptimizerKind::kSgd) {
      for (std::size_t i = tensor.offset; i < end; ++i) values[i] -= lr_ * grad[i];
      continue;
    }
    if (m_.size() != values.size()) {
      m_.assign(values.size(), 0.0);
      v_.assign(values.size(), 0.0);
    }
    for (std::size_t i = tensor.offset; i < end; ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
      const double m_hat = m_[i] / bc1;
      const double v_hat = v_[i] / bc2;
      values[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

std::vector<Experience> collect_batch(const EncoderPolicy& policy, const TrainingView& data,
                                      const RewardConfig& reward_config,
                                      std::size_t batch_size, Rng& rng) {
  const std::size_t n = data.cards.size();
  if (n == 0) throw std::invalid_argument("collect_batch: empty training set");
  if (data.labels.size() != n || (!data.forest_p.empty() && data.forest_p.size() != n) ||
      (!data.tags.empty() && data.tags.size() != n)) {
    throw std::invalid_argument("collect_batch: training view columns differ in length");
  }
  if (!data.tags.empty()) require_training_tags(data.tags, "collect_batch");
  reward_config.validate();

  std::vector<double> cumulative(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += data.labels[i] == 1 ? reward_config.positive_oversample_weight : 1.0;
    cumulative[i] = total;
  }

  std::vector<Experience> batch;
  batch.reserve(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b) {
    const double u = rng.uniform() * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const auto row = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), n - 1);
    const auto out = policy.forward(data.cards[row]);
    const auto sample = sample_action(out, rng);
    Experience e;
    e.row = row;
    e.action = sample.action;
    e.label = data.labels[row];
    const double p = data.forest_p.empty() ? 0.5 : data.forest_p[row];
    e.q = rf_evaluation(p, e.action);
    e.reward = hybrid_reward(task_reward(e.action, e.label, reward_config), e.q,
                             reward_config.lambda);
    e.old_log_prob = sample.log_prob;
    e.old_value = out.value;
    batch.push_back(e);
  }
  return batch;
}

double compute_advantage(const Experience& e) { return e.reward - e.old_value; }

std::vector<double> compute_advantages(std::span<const Experience> batch, bool normalize) {
  std::vector<double> adv;
  adv.reserve(batch.size());
  for (const auto& e : batch) adv.push_back(compute_advantage(e));
  if (normalize && adv.size() > 1) {
    const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / static_cast<double>(adv.size());
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / static_cast<double>(adv.size()));
    for (double& a : adv) a = (a - mean) / (sd + 1e-8);
  }
  return adv;
}

LossTerms ppo_loss(const EncoderPolicy& policy, std::span<const Experience> minibatch,
                   std::span<const double> advantages, std::span<const TokenizedCard> cards,
                   const PPOConfig& config, std::span<double> grad) {
  if (minibatch.empty()) throw std::invalid_argument("ppo_loss: empty minibatch");
  if (advantages.size() != minibatch.size()) {
    throw std::invalid_argument("ppo_loss: one advantage per experience required");
  }
  const double scale = 1.0 / static_cast<double>(minibatch.size());
  const double eps = config.clip_epsilon;
  LossTerms terms;
  ForwardCache cache;
  for (std::size_t i = 0; i < minibatch.size(); ++i) {
    const auto& e = minibatch[i];
    const double adv = advantages[i];
    const auto out = policy.forward(cards[e.row], cache);
    const double logp = log_prob(out.logits, e.action);
    const double ratio = std::exp(logp - e.old_log_prob);
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
    const double surrogate = std::min(unclipped, clipped);
    const double h = entropy2(out.action_probs);
    const double verr = out.value - e.reward;
    const double loss = -surrogate + config.value_coef * verr * verr - config.entropy_coef * h;
    check_loss(loss);

    terms.total += scale * loss;
    terms.policy += scale * -surrogate;
    terms.value += scale * verr * verr;
    terms.entropy += scale * h;
    terms.mean_ratio += scale * ratio;
    terms.clip_fraction += scale * (std::abs(ratio - 1.0) > eps ? 1.0 : 0.0);

    OutputGradient up;
    // The unclipped branch is active when it is the smaller term.
    const double dsurr_dlogp = unclipped <= clipped ? ratio * adv : 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
      const double onehot = static_cast<int>(j) == e.action ? 1.0 : 0.0;
      up.logits[j] = -scale * dsurr_dlogp * (onehot - out.action_probs[j]);
    }
    add_entropy_grad(out.action_probs, config.entropy_coef, scale, up.logits);
    up.value = scale * 2.0 * config.value_coef * verr;
    policy.backward(cache, up, grad);
  }
  return terms;
}

LossTerms reinforce_loss(const EncoderPolicy& policy, std::span<const Experience> minibatch,
                         std::span<const TokenizedCard> cards, const PPOConfig& config,
                         std::span<double> grad) {
  if (minibatch.empty()) throw std::invalid_argument("reinforce_loss: empty minibatch");
  const double scale = 1.0 / static_cast<double>(minibatch.size());
  LossTerms terms;
  ForwardCache cache;
  for (const auto& e : minibatch) {
    const auto out = policy.forward(cards[e.row], cache);
    const double logp = log_prob(out.logits, e.action);
    const double h = entropy2(out.action_probs);
    const double verr = out.value - e.reward;
    const double loss = -e.reward * logp + config.value_coef * verr * verr -
                        config.entropy_coef * h;
    check_loss(loss);
    terms.total += scale * loss;
    terms.policy += scale * -e.reward * logp;
    terms.value += scale * verr * verr;
    terms.entropy += scale * h;
    terms.mean_ratio += scale * std::exp(logp - e.old_log_prob);

    OutputGradient up;
    for (std::size_t j = 0; j < 2; ++j) {
      const double onehot = static_cast<int>(j) == e.action ? 1.0 : 0.0;
      up.logits[j] = -scale * e.reward * (onehot - out.action_probs[j]);
    }
    add_entropy_grad(out.action_probs, config.entropy_coef, scale, up.logits);
    up.value = scale * 2.0 * config.value_coef * verr;
    policy.backward(cache, up, grad);
  }
  return terms;
}

BatchStats ppo_update(EncoderPolicy& policy, Optimizer& optimizer,
                      std::span<const Experience> batch, std::span<const TokenizedCard> cards,
                      const PPOConfig& config, Rng& rng) {
  config.validate();
  const auto advantages = compute_advantages(batch, config.normalize_advantage);
  std::vector<double> mb_adv;
  return run_epochs(policy, optimizer, batch, config, config.inner_epochs, rng,
                    [&](std::span<const Experience> mb, std::span<const std::size_t> idx,
                        std::span<double> grad) {
                      mb_adv.clear();
                      for (auto i : idx) mb_adv.push_back(advantages[i]);
                      return ppo_loss(policy, mb, mb_adv, cards, config, grad);
                    });
}

BatchStats reinforce_update(EncoderPolicy& policy, Optimizer& optimizer,
                            std::span<const Experience> batch,
                            std::span<const TokenizedCard> cards, const PPOConfig& config,
                            Rng& rng) {
  config.validate();
  return run_epochs(policy, optimizer, batch, config, 1, rng,
                    [&](std::span<const Experience> mb, std::span<const std::size_t>,
                        std::span<double> grad) {
                      return reinforce_loss(policy, mb, cards, config, grad);
                    });
}

}  // namespace rct
