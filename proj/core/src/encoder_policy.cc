#include "rct/encoder_policy.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace rct {
namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kNumericClamp = 6.0;
constexpr std::string_view kCheckpointMagic = "rct-encoder-policy";
constexpr int kCheckpointVersion = 1;

double signed_log1p(double v) { return std::copysign(std::log1p(std::abs(v)), v); }

// Row-wise layer normalization; keeps xhat and 1/std for the backward pass.
void layer_norm(const RowMatrix& x, ConstRowMatrixMap gain, ConstRowMatrixMap bias,
                RowMatrix& xhat, Eigen::VectorXd& rstd, RowMatrix& out) {
  const auto n = x.rows();
  const auto d = static_cast<double>(x.cols());
  xhat.resize(n, x.cols());
  rstd.resize(n);
  out.resize(n, x.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean = x.row(i).sum() / d;
    const double var = (x.row(i).array() - mean).square().sum() / d;
    rstd(i) = 1.0 / std::sqrt(var + kLayerNormEps);
    xhat.row(i) = (x.row(i).array() - mean) * rstd(i);
    out.row(i) = xhat.row(i).cwiseProduct(gain.row(0)) + bias.row(0);
  }
}

// Accumulates gain/bias gradients and returns d(loss)/d(x).
RowMatrix layer_norm_backward(const RowMatrix& dout, const RowMatrix& xhat,
                              const Eigen::VectorXd& rstd, ConstRowMatrixMap gain,
                              RowMatrixMap dgain, RowMatrixMap dbias) {
  const auto d = static_cast<double>(xhat.cols());
  RowMatrix dx(dout.rows(), dout.cols());
  for (Eigen::Index i = 0; i < dout.rows(); ++i) {
    dgain.row(0) += dout.row(i).cwiseProduct(xhat.row(i));
    dbias.row(0) += dout.row(i);
    const Eigen::RowVectorXd dxhat = dout.row(i).cwiseProduct(gain.row(0));
    const double mean_dxhat = dxhat.sum() / d;
    const double mean_dxhat_xhat = dxhat.dot(xhat.row(i)) / d;
    dx.row(i) = rstd(i) * (dxhat.array() - mean_dxhat -
                           xhat.row(i).array() * mean_dxhat_xhat);
  }
  return dx;
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

double gelu_grad(double x) {
  const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
  return 0.5 * (1.0 + t) +
         0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

void append_number(std::string& out, double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), ptr);
}

void check_finite(double v, std::string_view what) {
  if (!std::isfinite(v)) {
    throw NumericError("encoder produced a non-finite " + std::string(what));
  }
}

}  // namespace

std::array<double, 2> softmax2(const std::array<double, 2>& logits) {
  const double m = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - m);
  const double e1 = std::exp(logits[1] - m);
  const double z = e0 + e1;
  return {e0 / z, e1 / z};
}

double entropy2(const std::array<double, 2>& probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

ActionSample sample_action(const PolicyOutput& output, Rng& rng) {
  const double p1 = output.action_probs[1];
  const int action = rng.uniform() < p1 ? 1 : 0;
  return {action, std::log(output.action_probs[static_cast<std::size_t>(action)])};
}

std::size_t ParameterSet::add(std::string name, std::size_t rows, std::size_t cols) {
  TensorInfo t;
  t.name = std::move(name);
  t.offset = values_.size();
  t.rows = rows;
  t.cols = cols;
  layout_.push_back(std::move(t));
  values_.resize(values_.size() + rows * cols, 0.0);
  return layout_.size() - 1;
}

std::size_t ParameterSet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    if (layout_[i].name == name) return i;
  }
  throw std::out_of_range("no tensor named " + std::string(name));
}

void ParameterSet::set_trainable(std::string_view prefix, bool trainable) {
  for (auto& t : layout_) {
    if (t.name.rfind(prefix, 0) == 0) t.trainable = trainable;
  }
}

std::vector<std::uint8_t> ParameterSet::trainable_mask() const {
  std::vector<std::uint8_t> mask(values_.size(), 0);
  for (const auto& t : layout_) {
    std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(t.offset), t.size(),
                t.trainable ? 1 : 0);
  }
  return mask;
}

EncoderPolicy::EncoderPolicy(const EncoderConfig& config) : config_(config) {
  if (config_.vocab_size < 4) throw std::invalid_argument("vocab_size must cover specials");
  if (config_.d_model == 0 || config_.n_heads == 0 ||
      config_.d_model % config_.n_heads != 0) {
    throw std::invalid_argument("d_model must be a positive multiple of n_heads");
  }
  if (config_.max_len < 2 || config_.max_segments == 0) {
    throw std::invalid_argument("max_len must be >= 2 and max_segments >= 1");
  }
  build_layout();
  Rng rng(config_.seed);
  initialize(rng);
}

void EncoderPolicy::build_layout() {
  const auto d = config_.d_model;
  const auto f = config_.ff_width();
  tok_emb_ = params_.add("embed.token", config_.vocab_size, d);
  pos_emb_ = params_.add("embed.position", config_.max_len, d);
  seg_emb_ = params_.add("embed.segment", config_.max_segments, d);
  num_emb_ = params_.add("embed.number", 1, d);
  num_proj_ = params_.add("embed.number_scale", 1, d);
  num_mean_ = params_.add("scaler.mean", config_.max_segments, 1);
  num_scale_ = params_.add("scaler.inv_std", config_.max_segments, 1);
  layers_.clear();
  for (std::size_t l = 0; l < config_.n_layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    LayerIndex li{};
    li.ln1_g = params_.add(p + "ln1.gain", 1, d);
    li.ln1_b = params_.add(p + "ln1.bias", 1, d);
    li.wq = params_.add(p + "attn.wq", d, d);
    li.bq = params_.add(p + "attn.bq", 1, d);
    li.wk = params_.add(p + "attn.wk", d, d);
    li.bk = params_.add(p + "attn.bk", 1, d);
    li.wv = params_.add(p + "attn.wv", d, d);
    li.bv = params_.add(p + "attn.bv", 1, d);
    li.wo = params_.add(p + "attn.wo", d, d);
    li.bo = params_.add(p + "attn.bo", 1, d);
    li.ln2_g = params_.add(p + "ln2.gain", 1, d);
    li.ln2_b = params_.add(p + "ln2.bias", 1, d);
    li.w1 = params_.add(p + "ffn.w1", d, f);
    li.b1 = params_.add(p + "ffn.b1", 1, f);
    li.w2 = params_.add(p + "ffn.w2", f, d);
    li.b2 = params_.add(p + "ffn.b2", 1, d);
    layers_.push_back(li);
  }
  lnf_g_ = params_.add("final_ln.gain", 1, d);
  lnf_b_ = params_.add("final_ln.bias", 1, d);
  cls_w_ = params_.add("head.cls.w", d, 2);
  cls_b_ = params_.add("head.cls.b", 1, 2);
  val_w_ = params_.add("head.value.w", d, 1);
  val_b_ = params_.add("head.value.b", 1, 1);
  params_.set_trainable("scaler.", false);
}

void EncoderPolicy::initialize(Rng& rng) {
  auto fill_normal = [&](std::size_t idx, double stddev) {
    auto t = params_.tensor(idx);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = stddev * rng.normal();
  };
  auto fill_xavier = [&](std::size_t idx) {
    auto t = params_.tensor(idx);
    const double a = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      t.data()[i] = a * (2.0 * rng.uniform() - 1.0);
    }
  };
  fill_normal(tok_emb_, 0.1);
  fill_normal(pos_emb_, 0.1);
  fill_normal(seg_emb_, 0.1);
  fill_normal(num_emb_, 0.1);
  fill_normal(num_proj_, 0.5);
  params_.tensor(num_mean_).setZero();
  params_.tensor(num_scale_).setOnes();
  for (const auto& li : layers_) {
    params_.tensor(li.ln1_g).setOnes();
    params_.tensor(li.ln2_g).setOnes();
    for (auto idx : {li.wq, li.wk, li.wv, li.wo, li.w1, li.w2}) fill_xavier(idx);
  }
  params_.tensor(lnf_g_).setOnes();
  if (!config_.zero_init_heads) {
    fill_xavier(cls_w_);
    fill_xavier(val_w_);
  }
}

void EncoderPolicy::fit_numeric_scaler(std::span<const TokenizedCard> train_cards) {
  const auto segments = config_.max_segments;
  std::vector<double> sum(segments, 0.0), sum_sq(segments, 0.0), count(segments, 0.0);
  for (const auto& card : train_cards) {
    for (std::size_t i = 0; i < card.length; ++i) {
      if (std::isnan(card.numbers[i])) continue;
      const auto s = std::min<std::size_t>(card.segments[i], segments - 1);
      const double g = signed_log1p(card.numbers[i]);
      sum[s] += g;
      sum_sq[s] += g * g;
      count[s] += 1.0;
    }
  }
  auto mean = params_.tensor(num_mean_);
  auto inv_std = params_.tensor(num_scale_);
  for (std::size_t s = 0; s < segments; ++s) {
    const auto r = static_cast<Eigen::Index>(s);
    if (count[s] == 0.0) {
      mean(r, 0) = 0.0;
      inv_std(r, 0) = 1.0;
      continue;
    }
    const double m = sum[s] / count[s];
    const double var = std::max(0.0, sum_sq[s] / count[s] - m * m);
    mean(r, 0) = m;
    inv_std(r, 0) = var > 1e-12 ? 1.0 / std::sqrt(var) : 1.0;
  }
}

PolicyOutput EncoderPolicy::forward(const TokenizedCard& tokens) const {
  ForwardCache cache;
  return forward(tokens, cache);
}

PolicyOutput EncoderPolicy::forward(const TokenizedCard& tokens,
                                    ForwardCache& cache) const {
  const auto n = tokens.length;
  if (n == 0 || n > config_.max_len || tokens.ids.size() < n) {
    throw std::invalid_argument("token sequence length outside [1, max_len]");
  }
  const auto d = static_cast<Eigen::Index>(config_.d_model);
  const auto heads = config_.n_heads;
  const auto dh = static_cast<Eigen::Index>(config_.d_model / heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  cache.tokens = &tokens;
  cache.length = n;
  cache.numeric_z.assign(n, std::numeric_limits<double>::quiet_NaN());

  const auto tok = params_.tensor(tok_emb_);
  const auto pos = params_.tensor(pos_emb_);
  const auto seg = params_.tensor(seg_emb_);
  const auto num = params_.tensor(num_emb_);
  const auto num_proj = params_.tensor(num_proj_);
  const auto num_mean = params_.tensor(num_mean_);
  const auto num_scale = params_.tensor(num_scale_);

  RowMatrix x(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const auto id = tokens.ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size) {
      throw std::invalid_argument("token id " + std::to_string(id) +
                                  " outside the vocabulary");
    }
    const auto s = static_cast<Eigen::Index>(
        std::min<std::size_t>(tokens.segments[i], config_.max_segments - 1));
    const double literal = tokens.numbers.empty()
                               ? std::numeric_limits<double>::quiet_NaN()
                               : tokens.numbers[i];
    if (config_.numeric_embedding && !std::isnan(literal) && id != kClsId &&
        id != kSepId) {
      double z = (signed_log1p(literal) - num_mean(s, 0)) * num_scale(s, 0);
      z = std::clamp(z, -kNumericClamp, kNumericClamp);
      cache.numeric_z[i] = z;
      x.row(r) = num.row(0) + z * num_proj.row(0);
    } else {
      x.row(r) = tok.row(id);
    }
    x.row(r) += pos.row(r) + seg.row(s);
  }

  cache.layers.resize(config_.n_layers);
  for (std::size_t l = 0; l < config_.n_layers; ++l) {
    const auto& li = layers_[l];
    auto& c = cache.layers[l];
    const Eigen::Index rows = x.rows();
    // Only the CLS row of the last layer reaches the heads.
    const Eigen::Index m = (l + 1 == config_.n_layers) ? 1 : rows;

    c.input = std::move(x);
    layer_norm(c.input, params_.tensor(li.ln1_g), params_.tensor(li.ln1_b), c.xhat1,
               c.rstd1, c.normed1);
    c.q = (c.normed1.topRows(m) * params_.tensor(li.wq)).rowwise() +
          params_.tensor(li.bq).row(0);
    c.k = (c.normed1 * params_.tensor(li.wk)).rowwise() + params_.tensor(li.bk).row(0);
    c.v = (c.normed1 * params_.tensor(li.wv)).rowwise() + params_.tensor(li.bv).row(0);
    c.attn.resize(heads);
    c.context.resize(m, d);
    for (std::size_t h = 0; h < heads; ++h) {
      const auto col = static_cast<Eigen::Index>(h) * dh;
      RowMatrix scores =
          (c.q.middleCols(col, dh) * c.k.middleCols(col, dh).transpose()) * scale;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double mx = scores.row(i).maxCoeff();
        scores.row(i) = (scores.row(i).array() - mx).exp();
        scores.row(i) /= scores.row(i).sum();
      }
      c.context.middleCols(col, dh) = scores * c.v.middleCols(col, dh);
      c.attn[h] = std::move(scores);
    }
    c.hidden = c.input.topRows(m) + ((c.context * params_.tensor(li.wo)).rowwise() +
                                     params_.tensor(li.bo).row(0));
    layer_norm(c.hidden, params_.tensor(li.ln2_g), params_.tensor(li.ln2_b), c.xhat2,
               c.rstd2, c.normed2);
    c.pre_act = (c.normed2 * params_.tensor(li.w1)).rowwise() +
                params_.tensor(li.b1).row(0);
    c.act = c.pre_act.unaryExpr([](double v) { return gelu(v); });
    x = c.hidden + ((c.act * params_.tensor(li.w2)).rowwise() +
                    params_.tensor(li.b2).row(0));
  }

  cache.final_in = x.row(0);
  {
    const double dd = static_cast<double>(d);
    const double mean = cache.final_in.sum() / dd;
    const double var = (cache.final_in.array() - mean).square().sum() / dd;
    cache.final_rstd = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.final_xhat = (cache.final_in.array() - mean) * cache.final_rstd;
  }
  const Eigen::RowVectorXd h =
      cache.final_xhat.cwiseProduct(params_.tensor(lnf_g_).row(0)) +
      params_.tensor(lnf_b_).row(0);

  PolicyOutput out;
  out.embedding = h.transpose();
  const Eigen::RowVectorXd logits =
      h * params_.tensor(cls_w_) + params_.tensor(cls_b_).row(0);
  out.logits = {logits(0), logits(1)};
  out.value = (h * params_.tensor(val_w_))(0, 0) + params_.tensor(val_b_)(0, 0);
  check_finite(out.logits[0], "logit");
  check_finite(out.logits[1], "logit");
  check_finite(out.value, "value estimate");
  out.action_probs = softmax2(out.logits);
  cache.output = out;
  return out;
}

void EncoderPolicy::backward(const ForwardCache& cache, const OutputGradient& upstream,
                             std::span<double> grad) const {
  if (grad.size() != params_.size()) {
    throw std::invalid_argument("gradient buffer does not match parameter layout");
  }
  const auto& layout = params_.layout();
  auto g = [&](std::size_t idx) { return ParameterSet::view(grad, layout[idx]); };

  const auto d = static_cast<Eigen::Index>(config_.d_model);
  const auto heads = config_.n_heads;
  const auto dh = static_cast<Eigen::Index>(config_.d_model / heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto& out = cache.output;

  // Heads.
  const Eigen::RowVectorXd h = out.embedding.transpose();
  Eigen::RowVector2d dlogits(upstream.logits[0], upstream.logits[1]);
  g(cls_w_) += h.transpose() * dlogits;
  g(cls_b_).row(0) += dlogits;
  g(val_w_).col(0) += h.transpose() * upstream.value;
  g(val_b_)(0, 0) += upstream.value;
  Eigen::RowVectorXd dh_vec = dlogits * params_.tensor(cls_w_).transpose() +
                              upstream.value * params_.tensor(val_w_).col(0).transpose();

  // Final layer norm.
  RowMatrix dx(1, d);
  {
    g(lnf_g_).row(0) += dh_vec.cwiseProduct(cache.final_xhat);
    g(lnf_b_).row(0) += dh_vec;
    const Eigen::RowVectorXd dxhat = dh_vec.cwiseProduct(params_.tensor(lnf_g_).row(0));
    const double dd = static_cast<double>(d);
    const double mean_dxhat = dxhat.sum() / dd;
    const double mean_dxhat_xhat = dxhat.dot(cache.final_xhat) / dd;
    dx.row(0) = cache.final_rstd * (dxhat.array() - mean_dxhat -
                                    cache.final_xhat.array() * mean_dxhat_xhat);
  }
  if (config_.n_layers == 0) {
    RowMatrix full = RowMatrix::Zero(static_cast<Eigen::Index>(cache.length), d);
    full.row(0) = dx.row(0);
    dx = std::move(full);
  }

  for (std::size_t l = config_.n_layers; l-- > 0;) {
    const auto& li = layers_[l];
    const auto& c = cache.layers[l];
    const Eigen::Index m = c.hidden.rows();
    const Eigen::Index rows = c.input.rows();

    // Feed-forward block: x_out = hidden + W2 gelu(W1 ln2(hidden)).
    g(li.w2) += c.act.transpose() * dx;
    g(li.b2).row(0) += dx.colwise().sum();
    RowMatrix dact = dx * params_.tensor(li.w2).transpose();
    RowMatrix dpre = dact.cwiseProduct(c.pre_act.unaryExpr([](double v) { return gelu_grad(v); }));
    g(li.w1) += c.normed2.transpose() * dpre;
    g(li.b1).row(0) += dpre.colwise().sum();
    RowMatrix dnormed2 = dpre * params_.tensor(li.w1).transpose();
    RowMatrix dhidden = dx + layer_norm_backward(dnormed2, c.xhat2, c.rstd2,
                                                 params_.tensor(li.ln2_g), g(li.ln2_g),
                                                 g(li.ln2_b));

    // Attention block: hidden = input[:m] + Wo context.
    g(li.wo) += c.context.transpose() * dhidden;
    g(li.bo).row(0) += dhidden.colwise().sum();
    RowMatrix dcontext = dhidden * params_.tensor(li.wo).transpose();
    RowMatrix dq(m, d), dk(rows, d), dv(rows, d);
    for (std::size_t hd = 0; hd < heads; ++hd) {
      const auto col = static_cast<Eigen::Index>(hd) * dh;
      const RowMatrix& p = c.attn[hd];
      const RowMatrix dctx = dcontext.middleCols(col, dh);
      dv.middleCols(col, dh) = p.transpose() * dctx;
      RowMatrix dp = dctx * c.v.middleCols(col, dh).transpose();
      const Eigen::VectorXd row_dot = dp.cwiseProduct(p).rowwise().sum();
      RowMatrix ds = p.cwiseProduct(dp.colwise() - row_dot);
      dq.middleCols(col, dh) = (ds * c.k.middleCols(col, dh)) * scale;
      dk.middleCols(col, dh) = (ds.transpose() * c.q.middleCols(col, dh)) * scale;
    }
    g(li.wq) += c.normed1.topRows(m).transpose() * dq;
    g(li.bq).row(0) += dq.colwise().sum();
    g(li.wk) += c.normed1.transpose() * dk;
    g(li.bk).row(0) += dk.colwise().sum();
    g(li.wv) += c.normed1.transpose() * dv;
    g(li.bv).row(0) += dv.colwise().sum();
    RowMatrix dnormed1 = dk * params_.tensor(li.wk).transpose() +
                         dv * params_.tensor(li.wv).transpose();
    dnormed1.topRows(m) += dq * params_.tensor(li.wq).transpose();
    RowMatrix dinput = layer_norm_backward(dnormed1, c.xhat1, c.rstd1,
                                           params_.tensor(li.ln1_g), g(li.ln1_g),
                                           g(li.ln1_b));
    dinput.topRows(m) += dhidden;
    dx = std::move(dinput);
  }

  // Embeddings.
  const auto& tokens = *cache.tokens;
  auto dtok = g(tok_emb_);
  auto dpos = g(pos_emb_);
  auto dseg = g(seg_emb_);
  auto dnum = g(num_emb_);
  auto dnum_proj = g(num_proj_);
  for (std::size_t i = 0; i < cache.length; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const auto s = static_cast<Eigen::Index>(
        std::min<std::size_t>(tokens.segments[i], config_.max_segments - 1));
    dpos.row(r) += dx.row(r);
    dseg.row(s) += dx.row(r);
    if (!std::isnan(cache.numeric_z[i])) {
      dnum.row(0) += dx.row(r);
      dnum_proj.row(0) += cache.numeric_z[i] * dx.row(r);
    } else {
      dtok.row(tokens.ids[i]) += dx.row(r);
    }
  }
}

double EncoderPolicy::predict_proba(const TokenizedCard& tokens) const {
  return forward(tokens).action_probs[1];
}

Eigen::MatrixXd EncoderPolicy::embed_all(std::span<const TokenizedCard> cards) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(cards.size()),
                      static_cast<Eigen::Index>(config_.d_model));
  for (std::size_t i = 0; i < cards.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = forward(cards[i]).embedding.transpose();
  }
  return out;
}

std::vector<double> EncoderPolicy::predict_all(std::span<const TokenizedCard> cards) const {
  std::vector<double> out;
  out.reserve(cards.size());
  for (const auto& c : cards) out.push_back(predict_proba(c));
  return out;
}

std::string EncoderPolicy::serialize() const {
  std::string out;
  out += std::string(kCheckpointMagic) + " " + std::to_string(kCheckpointVersion) + "\n";
  out += "config " + std::to_string(config_.vocab_size) + " " +
         std::to_string(config_.d_model) + " " + std::to_string(config_.n_layers) + " " +
         std::to_string(config_.n_heads) + " " + std::to_string(config_.d_ff) + " " +
         std::to_string(config_.max_len) + " " + std::to_string(config_.max_segments) +
         " " + std::to_string(config_.numeric_embedding ? 1 : 0) + " " +
         std::to_string(config_.zero_init_heads ? 1 : 0) + " " +
         std::to_string(config_.seed) + "\n";
  const auto values = params_.values();
  for (const auto& t : params_.layout()) {
    out += "tensor " + t.name + " " + std::to_string(t.rows) + " " +
           std::to_string(t.cols) + " " + (t.trainable ? "1" : "0") + "\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i > 0) out.push_back(' ');
      append_number(out, values[t.offset + i]);
    }
    out.push_back('\n');
  }
  return out;
}

EncoderPolicy EncoderPolicy::deserialize(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != kCheckpointMagic || version != kCheckpointVersion) {
    throw std::runtime_error("not an encoder policy checkpoint (version " +
                             std::to_string(kCheckpointVersion) + ")");
  }
  std::string tag;
  EncoderConfig cfg;
  int numeric = 0, zero_heads = 0;
  in >> tag >> cfg.vocab_size >> cfg.d_model >> cfg.n_layers >> cfg.n_heads >> cfg.d_ff >>
      cfg.max_len >> cfg.max_segments >> numeric >> zero_heads >> cfg.seed;
  if (!in || tag != "config") throw std::runtime_error("checkpoint: bad config line");
  cfg.numeric_embedding = numeric != 0;
  cfg.zero_init_heads = zero_heads != 0;
  EncoderPolicy policy(cfg);
  auto values = policy.params_.values();
  const auto& layout = policy.params_.layout();
  for (std::size_t ti = 0; ti < layout.size(); ++ti) {
    const auto& expected = layout[ti];
    std::string name;
    std::size_t rows = 0, cols = 0;
    int trainable = 0;
    in >> tag >> name >> rows >> cols >> trainable;
    if (!in || tag != "tensor" || name != expected.name || rows != expected.rows ||
        cols != expected.cols) {
      throw std::runtime_error("checkpoint: tensor header mismatch at " + expected.name);
    }
    policy.params_.set_tensor_trainable(ti, trainable != 0);
    for (std::size_t i = 0; i < expected.size(); ++i) {
      std::string word;
      in >> word;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), v);
      if (ec != std::errc() || ptr != word.data() + word.size()) {
        throw std::runtime_error("checkpoint: bad value in " + name);
      }
      values[expected.offset + i] = v;
    }
  }
  return policy;
}

void EncoderPolicy::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << serialize();
}

EncoderPolicy EncoderPolicy::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return deserialize(buffer.str());
}

}  // namespace rct
