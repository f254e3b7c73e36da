#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "grec/data.hpp"
#include "grec/masker.hpp"
#include "grec/ops.hpp"
#include "grec/tensor.hpp"

namespace grec {

enum class ModelKind {
  kGRec,
  kNextItNet,
  kNextItNetPlus,
  kTNextItNet,
  kEncoderOnly,
  kMostPop,
};

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

struct ModelConfig {
  ModelKind kind = ModelKind::kGRec;
  int vocab = 0;            // V, number of items
  std::size_t length = 0;   // t, session length
  std::size_t d = 64;
  std::size_t f = 128;      // projector inner width
  std::size_t kernel = 3;
  std::vector<int> encoder_dilations{1, 2, 4, 8, 1, 2, 4, 8};
  std::vector<int> decoder_dilations{1, 2, 4, 8, 1, 2, 4, 8};
  double gamma = 0.5;
  bool projector = true;

  // Per-kind defaults: only GRec carries the projector unless asked to.
  static ModelConfig defaults(ModelKind kind, int vocab, std::size_t length);

  bool has_encoder() const;
  bool has_decoder() const;
  bool uses_projector() const;
  bool uses_gaps() const;
  int mask_id() const { return vocab + 1; }

  void validate() const;

  // Flat `key=value` lines; parse rejects unknown keys.
  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);
};

template <typename T>
struct NamedParam {
  std::string name;
  Tensor<T> tensor;
};

/// Two dilated convolutions wrapped by a skip connection:
/// x + relu(ln(conv2(relu(ln(conv1(x)))))).
template <typename T>
struct ResidualBlock {
  ConvKernel<T> first;
  ConvKernel<T> second;
  Tensor<T> gain1, shift1, gain2, shift2;

  Tensor<T> forward(const Tensor<T>& x) const;
};

template <typename T>
struct ConvStack {
  std::vector<ResidualBlock<T>> blocks;

  Tensor<T> forward(const Tensor<T>& x) const;
  std::size_t receptive_field() const;
};

// Inverted bottleneck d -> f -> d with a skip connection.
template <typename T>
struct Projector {
  Tensor<T> up_weight, up_bias, down_weight, down_bias;

  Tensor<T> forward(const Tensor<T>& aggregated) const;
};

// Logits for a set of prediction sites plus the items they must predict.
template <typename T>
struct SiteLogits {
  Tensor<T> logits;  // [M, V+1]
  std::vector<int> targets;
  std::vector<std::size_t> sites;  // flat b*t + pos of the hidden row used
};

/// Every neural model of the family behind one parameter registry.
///
/// GRec holds an encoder table of V+2 rows (PAD, items, MASK), a separate
/// decoder table of V+1 rows, a non-causal encoder stack, the projector, a
/// causal decoder stack and the softmax head. NextItNet and NextItNet+ keep
/// only the decoder path (optionally with the projector); tNextItNet adds a
/// second causal stack for the reversed direction and a head over the
/// concatenated hidden state; the encoder-only variant keeps the encoder
/// path and puts the head directly on it.
template <typename T>
class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t seed);

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const ModelConfig& config() const { return config_; }
  std::vector<NamedParam<T>>& params() { return params_; }
  const std::vector<NamedParam<T>>& params() const { return params_; }
  std::vector<Tensor<T>> param_tensors() const;
  void zero_grad();

  Tensor<T> encode(const IdMatrix& gapped) const;
  Tensor<T> project(const Tensor<T>& encoder_out, const Tensor<T>& decoder_emb) const;
  Tensor<T> decode(const Tensor<T>& projected) const;
  Tensor<T> logits(const Tensor<T>& hidden) const;

  // Hidden decoder input F_PR for decoder ids `x` and gapped encoder ids.
  // With `zero_encoder` the encoder output is replaced by zeros.
  Tensor<T> decoder_input(const IdMatrix& x, const IdMatrix* gapped,
                          bool zero_encoder = false) const;

  SiteLogits<T> grec_site_logits(const SessionBatch& batch,
                                 std::span<const MaskPlan> plans,
                                 bool zero_encoder = false) const;
  SiteLogits<T> nextitnet_site_logits(const SessionBatch& batch) const;
  SiteLogits<T> encoder_only_site_logits(const SessionBatch& batch,
                                         std::span<const MaskPlan> plans) const;

  Tensor<T> grec_loss(const SessionBatch& batch, std::span<const MaskPlan> plans,
                      bool zero_encoder = false) const;
  Tensor<T> nextitnet_loss(const SessionBatch& batch) const;
  Tensor<T> tnextitnet_loss(const SessionBatch& batch) const;
  Tensor<T> encoder_only_loss(const SessionBatch& batch,
                              std::span<const MaskPlan> plans) const;

  // Gaps for every row of the batch; row r draws from a substream derived
  // from (seed, epoch, source row index).
  std::vector<MaskPlan> sample_plans(const SessionBatch& batch, std::uint64_t seed,
                                     std::uint64_t epoch) const;

  // Objective for this model's kind. Gap-based kinds sample their own plans.
  Tensor<T> loss(const SessionBatch& batch, std::uint64_t seed,
                 std::uint64_t epoch) const;

  // Next-item logits [B, V+1] for each prefix (item ids, no PAD), read at
  // the final valid position without graph recording.
  std::vector<T> next_item_logits(std::span<const std::vector<int>> prefixes) const;

  // Layout of a prefix as this model consumes it at inference time.
  std::vector<int> inference_row(std::span<const int> prefix) const;

  std::vector<std::vector<T>> snapshot() const;
  void restore(const std::vector<std::vector<T>>& values);

  const ConvStack<T>& encoder_stack() const { return encoder_; }
  const ConvStack<T>& decoder_stack() const { return decoder_; }
  const ConvStack<T>& backward_stack() const { return backward_; }

 private:
  Tensor<T> add_param(std::string name, Shape shape);
  ConvStack<T> make_stack(const std::string& prefix, std::span<const int> dilations,
                          bool causal);

  Tensor<T> backward_direction_hidden(const IdMatrix& reversed) const;

  ModelConfig config_;
  std::vector<NamedParam<T>> params_;

  Tensor<T> encoder_embedding_;  // [V+2, d]
  Tensor<T> decoder_embedding_;  // [V+1, d]; shared embedding for tNextItNet
  ConvStack<T> encoder_;
  ConvStack<T> decoder_;
  ConvStack<T> backward_;  // tNextItNet only
  Projector<T> projector_;
  bool has_projector_ = false;
  Tensor<T> head_weight_;  // [h, V+1]
  Tensor<T> head_bias_;    // [V+1]
};

// Each row plus the reversal of its valid region (padding stays a prefix).
std::vector<Session> nextitnet_plus_expand(std::span<const Session> rows);

// Reverses the valid region of every row of an id matrix.
IdMatrix reverse_valid(const IdMatrix& ids);

/// Global popularity ranking from a training split; answers every query the
/// same way.
class MostPop {
 public:
  MostPop(std::span<const Session> train_rows, int vocab);

  int vocab() const { return vocab_; }
  // Scores indexed 0..V (PAD score is the lowest value).
  const std::vector<double>& scores() const { return scores_; }
  std::vector<int> ranking() const;

 private:
  int vocab_;
  std::vector<double> scores_;
};

struct RankedItem {
  int item;
  double score;
};

// Sorts items 1..V by descending score, ties by ascending index, and keeps
// the first n. Throws when n > V.
std::vector<RankedItem> top_n(std::span<const double> scores, int vocab, int n);

extern template class Model<float>;
extern template class Model<double>;

}  // namespace grec
