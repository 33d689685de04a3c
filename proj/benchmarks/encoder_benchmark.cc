#include <limits>
#include <vector>

#include <benchmark/benchmark.h>

#include "rct/encoder_policy.h"
#include "rct/ppo_trainer.h"
#include "rct/rng.h"

namespace {

rct::TokenizedCard random_card(std::size_t vocab, std::size_t length, std::size_t max_len,
                               rct::Rng& rng) {
  rct::TokenizedCard card;
  card.ids.assign(max_len, 0);
  card.mask.assign(max_len, 0);
  card.segments.assign(max_len, 0);
  card.numbers.assign(max_len, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < length; ++i) {
    card.ids[i] = static_cast<rct::TokenId>(4 + rng.uniform_index(vocab - 4));
    card.mask[i] = 1;
    card.segments[i] = static_cast<std::uint16_t>(1 + i / 6);
  }
  card.length = length;
  return card;
}

rct::EncoderConfig config_for(std::size_t d_model, std::size_t layers) {
  rct::EncoderConfig c;
  c.vocab_size = 500;
  c.d_model = d_model;
  c.n_layers = layers;
  c.n_heads = 4;
  c.max_len = 128;
  c.max_segments = 64;
  c.zero_init_heads = false;
  c.seed = 1;
  return c;
}

void BM_EncoderForward(benchmark::State& state) {
  const rct::EncoderPolicy policy(config_for(state.range(0), state.range(1)));
  rct::Rng rng(2);
  const auto card = random_card(500, 96, 128, rng);
  for (auto _ : state) benchmark::DoNotOptimize(policy.forward(card));
}
BENCHMARK(BM_EncoderForward)->Args({32, 2})->Args({64, 2})->Args({32, 1});

void BM_EncoderForwardBackward(benchmark::State& state) {
  const rct::EncoderPolicy policy(config_for(state.range(0), state.range(1)));
  rct::Rng rng(3);
  const auto card = random_card(500, 96, 128, rng);
  std::vector<double> grad(policy.params().size());
  rct::ForwardCache cache;
  for (auto _ : state) {
    const auto out = policy.forward(card, cache);
    rct::OutputGradient up;
    up.logits = {out.action_probs[0], out.action_probs[1] - 1.0};
    up.value = out.value;
    policy.backward(cache, up, grad);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_EncoderForwardBackward)->Args({32, 2})->Args({64, 2});

void BM_PPOUpdate(benchmark::State& state) {
  rct::EncoderPolicy policy(config_for(32, 2));
  rct::Rng rng(4);
  std::vector<rct::TokenizedCard> cards;
  std::vector<int> labels;
  for (int i = 0; i < 64; ++i) {
    cards.push_back(random_card(500, 96, 128, rng));
    labels.push_back(i % 3 == 0);
  }
  rct::PPOConfig cfg;
  rct::Optimizer opt(cfg, policy.params().size());
  for (auto _ : state) {
    const auto batch = rct::collect_batch(policy, {cards, labels, {}, {}}, {}, cfg.batch_size, rng);
    benchmark::DoNotOptimize(rct::ppo_update(policy, opt, batch, cards, cfg, rng));
  }
}
BENCHMARK(BM_PPOUpdate)->Unit(benchmark::kMillisecond);

}  // namespace
