#ifndef RCT_ENCODER_POLICY_H_
#define RCT_ENCODER_POLICY_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rct/rng.h"
#include "rct/tokenizer.h"

namespace rct {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixMap = Eigen::Map<RowMatrix>;
using ConstRowMatrixMap = Eigen::Map<const RowMatrix>;

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_ff = 0;  // 0 means 4 * d_model
  std::size_t max_len = 128;
  std::size_t max_segments = 64;
  // Numeric words are embedded as a shared "number" vector plus a learned
  // direction scaled by a standardized magnitude instead of their vocabulary
  // row. The standardization uses per-line statistics of
  // sign(v) * log1p(|v|) taken from the training cards (fit_numeric_scaler).
  bool numeric_embedding = true;
  bool zero_init_heads = true;
  std::uint64_t seed = 0;

  std::size_t ff_width() const { return d_ff == 0 ? 4 * d_model : d_ff; }
};

struct TensorInfo {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool trainable = true;

  std::size_t size() const { return rows * cols; }
};

// Flat parameter storage with a named tensor layout. Gradients and optimizer
// moments use the same layout so they can be handled as plain vectors.
class ParameterSet {
 public:
  std::size_t add(std::string name, std::size_t rows, std::size_t cols);

  RowMatrixMap tensor(std::size_t index) {
    const auto& t = layout_[index];
    return {values_.data() + t.offset, static_cast<Eigen::Index>(t.rows),
            static_cast<Eigen::Index>(t.cols)};
  }
  ConstRowMatrixMap tensor(std::size_t index) const {
    const auto& t = layout_[index];
    return {values_.data() + t.offset, static_cast<Eigen::Index>(t.rows),
            static_cast<Eigen::Index>(t.cols)};
  }
  static RowMatrixMap view(std::span<double> flat, const TensorInfo& t) {
    return {flat.data() + t.offset, static_cast<Eigen::Index>(t.rows),
            static_cast<Eigen::Index>(t.cols)};
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  const std::vector<TensorInfo>& layout() const { return layout_; }
  std::size_t size() const { return values_.size(); }
  std::size_t index_of(std::string_view name) const;

  // Marks every tensor whose name starts with `prefix`.
  void set_trainable(std::string_view prefix, bool trainable);
  void set_tensor_trainable(std::size_t index, bool trainable) {
    layout_.at(index).trainable = trainable;
  }
  // One flag per scalar parameter.
  std::vector<std::uint8_t> trainable_mask() const;

  friend bool operator==(const ParameterSet& a, const ParameterSet& b) {
    return a.values_ == b.values_;
  }

 private:
  std::vector<double> values_;
  std::vector<TensorInfo> layout_;
};

struct PolicyOutput {
  Eigen::VectorXd embedding;  // final-layer CLS state after the output norm
  std::array<double, 2> logits{};
  std::array<double, 2> action_probs{};
  double value = 0.0;
};

// Upstream derivatives of a scalar loss with respect to the policy outputs.
struct OutputGradient {
  std::array<double, 2> logits{};
  double value = 0.0;
};

struct ForwardCache;

// Pre-norm transformer encoder with a two-way classification head and a
// scalar value head, both reading the CLS position. Padding positions are
// never computed, so outputs do not depend on the padded length.
class EncoderPolicy {
 public:
  EncoderPolicy() = default;
  explicit EncoderPolicy(const EncoderConfig& config);

  PolicyOutput forward(const TokenizedCard& tokens) const;
  PolicyOutput forward(const TokenizedCard& tokens, ForwardCache& cache) const;
  // Adds d(loss)/d(params) into `grad` (layout of params()).
  void backward(const ForwardCache& cache, const OutputGradient& upstream,
                std::span<double> grad) const;

  // Stores per-card-line mean and spread of the numeric words as frozen
  // parameters. Call with training cards only.
  void fit_numeric_scaler(std::span<const TokenizedCard> train_cards);

  double predict_proba(const TokenizedCard& tokens) const;
  // Row i is the embedding of cards[i].
  Eigen::MatrixXd embed_all(std::span<const TokenizedCard> cards) const;
  std::vector<double> predict_all(std::span<const TokenizedCard> cards) const;

  const EncoderConfig& config() const { return config_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  void save(const std::filesystem::path& path) const;
  static EncoderPolicy load(const std::filesystem::path& path);
  std::string serialize() const;
  static EncoderPolicy deserialize(std::string_view text);

 private:
  struct LayerIndex {
    std::size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo;
    std::size_t ln2_g, ln2_b, w1, b1, w2, b2;
  };

  void build_layout();
  void initialize(Rng& rng);

  EncoderConfig config_;
  ParameterSet params_;
  std::size_t tok_emb_ = 0, pos_emb_ = 0, seg_emb_ = 0, num_emb_ = 0, num_proj_ = 0;
  std::size_t num_mean_ = 0, num_scale_ = 0;
  std::size_t lnf_g_ = 0, lnf_b_ = 0, cls_w_ = 0, cls_b_ = 0, val_w_ = 0, val_b_ = 0;
  std::vector<LayerIndex> layers_;
};

struct LayerCache {
  RowMatrix input;       // n x d
  RowMatrix xhat1;       // n x d
  Eigen::VectorXd rstd1; // n
  RowMatrix normed1;     // n x d
  RowMatrix q, k, v;     // m x d, n x d, n x d
  std::vector<RowMatrix> attn;  // per head, m x n
  RowMatrix context;     // m x d
  RowMatrix hidden;      // m x d, after attention residual
  RowMatrix xhat2;
  Eigen::VectorXd rstd2;
  RowMatrix normed2;
  RowMatrix pre_act;     // m x d_ff
  RowMatrix act;         // m x d_ff
};

struct ForwardCache {
  const TokenizedCard* tokens = nullptr;
  std::size_t length = 0;
  std::vector<double> numeric_z;  // standardized value per position, NaN if none
  std::vector<LayerCache> layers;
  Eigen::RowVectorXd final_in;
  Eigen::RowVectorXd final_xhat;
  double final_rstd = 0.0;
  PolicyOutput output;
};

struct ActionSample {
  int action = 0;
  double log_prob = 0.0;
};

ActionSample sample_action(const PolicyOutput& output, Rng& rng);

std::array<double, 2> softmax2(const std::array<double, 2>& logits);
double entropy2(const std::array<double, 2>& probs);

}  // namespace rct

#endif  // RCT_ENCODER_POLICY_H_
