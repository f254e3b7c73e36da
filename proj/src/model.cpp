#include "grec/model.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "grec/random.hpp"

namespace grec {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kGRec: return "grec";
    case ModelKind::kNextItNet: return "nextitnet";
    case ModelKind::kNextItNetPlus: return "nextitnet_plus";
    case ModelKind::kTNextItNet: return "tnextitnet";
    case ModelKind::kEncoderOnly: return "encoder_only";
    case ModelKind::kMostPop: return "mostpop";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  for (auto kind : {ModelKind::kGRec, ModelKind::kNextItNet, ModelKind::kNextItNetPlus,
                    ModelKind::kTNextItNet, ModelKind::kEncoderOnly, ModelKind::kMostPop}) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown model kind: " + name);
}

ModelConfig ModelConfig::defaults(ModelKind kind, int vocab, std::size_t length) {
  ModelConfig config;
  config.kind = kind;
  config.vocab = vocab;
  config.length = length;
  config.projector = kind == ModelKind::kGRec;
  return config;
}

bool ModelConfig::has_encoder() const {
  return kind == ModelKind::kGRec || kind == ModelKind::kEncoderOnly;
}

bool ModelConfig::has_decoder() const {
  return kind == ModelKind::kGRec || kind == ModelKind::kNextItNet ||
         kind == ModelKind::kNextItNetPlus || kind == ModelKind::kTNextItNet;
}

bool ModelConfig::uses_projector() const {
  return projector && (kind == ModelKind::kGRec || kind == ModelKind::kNextItNet ||
                       kind == ModelKind::kNextItNetPlus);
}

bool ModelConfig::uses_gaps() const {
  return kind == ModelKind::kGRec || kind == ModelKind::kEncoderOnly;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("model config: " + msg); };
  if (vocab < 1) fail("vocab must be >= 1");
  if (length < 2) fail("length must be >= 2");
  if (kind == ModelKind::kMostPop) return;
  if (d < 1 || f < 1) fail("d and f must be >= 1");
  if (kernel < 1) fail("kernel must be >= 1");
  if (has_encoder() && kernel % 2 == 0) fail("non-causal encoder needs an odd kernel");
  if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma must lie in (0, 1]");
  auto check_dilations = [&](const std::vector<int>& dil, const char* name) {
    if (dil.empty()) fail(std::string(name) + " must be nonempty");
    if (dil.size() % 2 != 0) fail(std::string(name) + " needs an even count (two convs per residual block)");
    for (int r : dil) {
      if (r < 1) fail(std::string(name) + " entries must be >= 1");
    }
  };
  if (has_encoder()) check_dilations(encoder_dilations, "encoder_dilations");
  if (has_decoder()) check_dilations(decoder_dilations, "decoder_dilations");
}

namespace {

std::string join_ints(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

std::vector<int> split_ints(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string field;
  while (std::getline(in, field, ',')) out.push_back(std::stoi(field));
  return out;
}

}  // namespace

std::string ModelConfig::to_text() const {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "kind=" << to_string(kind) << '\n'
      << "vocab=" << vocab << '\n'
      << "length=" << length << '\n'
      << "d=" << d << '\n'
      << "f=" << f << '\n'
      << "kernel=" << kernel << '\n'
      << "encoder_dilations=" << join_ints(encoder_dilations) << '\n'
      << "decoder_dilations=" << join_ints(decoder_dilations) << '\n'
      << "gamma=" << gamma << '\n'
      << "projector=" << (projector ? 1 : 0) << '\n';
  return out.str();
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  ModelConfig config;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("model config line without '=': " + line);
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    static const char* const kKeys[] = {"kind", "vocab", "length", "d", "f", "kernel",
                                        "encoder_dilations", "decoder_dilations", "gamma",
                                        "projector"};
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw std::invalid_argument("unknown model config key: " + key);
    }
    try {
      if (key == "kind") config.kind = parse_model_kind(value);
      else if (key == "vocab") config.vocab = std::stoi(value);
      else if (key == "length") config.length = std::stoul(value);
      else if (key == "d") config.d = std::stoul(value);
      else if (key == "f") config.f = std::stoul(value);
      else if (key == "kernel") config.kernel = std::stoul(value);
      else if (key == "encoder_dilations") config.encoder_dilations = split_ints(value);
      else if (key == "decoder_dilations") config.decoder_dilations = split_ints(value);
      else if (key == "gamma") config.gamma = std::stod(value);
      else if (key == "projector") config.projector = std::stoi(value) != 0;
    } catch (const std::exception&) {
      throw std::invalid_argument("bad value for model config key " + key + ": " + value);
    }
  }
  return config;
}

template <typename T>
Tensor<T> ResidualBlock<T>::forward(const Tensor<T>& x) const {
  auto h = relu(layer_norm(conv1d(x, first), gain1, shift1));
  h = relu(layer_norm(conv1d(h, second), gain2, shift2));
  return add(x, h);
}

template <typename T>
Tensor<T> ConvStack<T>::forward(const Tensor<T>& x) const {
  Tensor<T> h = x;
  for (const auto& block : blocks) h = block.forward(h);
  return h;
}

template <typename T>
std::size_t ConvStack<T>::receptive_field() const {
  std::size_t field = 1;
  for (const auto& block : blocks) {
    field += block.first.receptive_growth() + block.second.receptive_growth();
  }
  return field;
}

template <typename T>
Tensor<T> Projector<T>::forward(const Tensor<T>& aggregated) const {
  auto inner = relu(pointwise(aggregated, up_weight, up_bias));
  return add(aggregated, pointwise(inner, down_weight, down_bias));
}

namespace {

enum class Init { kNormal, kZeros, kOnes };

template <typename T>
void fill(Tensor<T>& tensor, Init init, Rng& rng) {
  auto data = tensor.mutable_data();
  for (auto& v : data) {
    switch (init) {
      case Init::kNormal: v = truncated_normal<T>(rng, 0.02); break;
      case Init::kZeros: v = T(0); break;
      case Init::kOnes: v = T(1); break;
    }
  }
}

std::size_t first_valid_column(const SessionBatch& batch, std::size_t row) {
  return batch.length() - batch.valid_len[row];
}

// Every (position j -> j+1) pair inside the valid region of each row.
void next_position_sites(const IdMatrix& ids, std::vector<std::size_t>& sites,
                         std::vector<int>& targets) {
  for (std::size_t b = 0; b < ids.rows; ++b) {
    const std::size_t first = ids.cols - valid_length(ids.row(b));
    for (std::size_t j = first; j + 1 < ids.cols; ++j) {
      sites.push_back(b * ids.cols + j);
      targets.push_back(ids.at(b, j + 1));
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> Model<T>::add_param(std::string name, Shape shape) {
  auto tensor = Tensor<T>::zeros(std::move(shape), true);
  params_.push_back({std::move(name), tensor});
  return tensor;
}

template <typename T>
ConvStack<T> Model<T>::make_stack(const std::string& prefix,
                                  std::span<const int> dilations, bool causal) {
  ConvStack<T> stack;
  const std::size_t d = config_.d, k = config_.kernel;
  for (std::size_t b = 0; b * 2 < dilations.size(); ++b) {
    const std::string base = prefix + ".block" + std::to_string(b);
    ResidualBlock<T> block;
    block.first.weight = add_param(base + ".conv1.weight", {k, d, d});
    block.first.bias = add_param(base + ".conv1.bias", {d});
    block.first.dilation = dilations[2 * b];
    block.first.causal = causal;
    block.gain1 = add_param(base + ".norm1.gain", {d});
    block.shift1 = add_param(base + ".norm1.shift", {d});
    block.second.weight = add_param(base + ".conv2.weight", {k, d, d});
    block.second.bias = add_param(base + ".conv2.bias", {d});
    block.second.dilation = dilations[2 * b + 1];
    block.second.causal = causal;
    block.gain2 = add_param(base + ".norm2.gain", {d});
    block.shift2 = add_param(base + ".norm2.shift", {d});
    stack.blocks.push_back(std::move(block));
  }
  return stack;
}

template <typename T>
Model<T>::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  if (config_.kind == ModelKind::kMostPop) {
    throw std::invalid_argument("MostPop has no neural parameters");
  }
  const std::size_t V = static_cast<std::size_t>(config_.vocab), d = config_.d;
  if (config_.has_encoder()) {
    encoder_embedding_ = add_param("encoder.embedding", {V + 2, d});
    encoder_ = make_stack("encoder", config_.encoder_dilations, false);
  }
  if (config_.has_decoder()) {
    decoder_embedding_ = add_param(
        config_.kind == ModelKind::kTNextItNet ? "embedding" : "decoder.embedding", {V + 1, d});
    decoder_ = make_stack(config_.kind == ModelKind::kTNextItNet ? "forward" : "decoder",
                          config_.decoder_dilations, true);
  }
  if (config_.kind == ModelKind::kTNextItNet) {
    backward_ = make_stack("backward", config_.decoder_dilations, true);
  }
  if (config_.uses_projector()) {
    has_projector_ = true;
    projector_.up_weight = add_param("projector.up.weight", {d, config_.f});
    projector_.up_bias = add_param("projector.up.bias", {config_.f});
    projector_.down_weight = add_param("projector.down.weight", {config_.f, d});
    projector_.down_bias = add_param("projector.down.bias", {d});
  }
  const std::size_t head_in = config_.kind == ModelKind::kTNextItNet ? 2 * d : d;
  head_weight_ = add_param("head.weight", {head_in, V + 1});
  head_bias_ = add_param("head.bias", {V + 1});

  Rng rng(derive_seed(seed, Stream::kInit));
  for (auto& p : params_) {
    const auto& n = p.name;
    auto ends_with = [&n](const std::string& s) {
      return n.size() >= s.size() && n.compare(n.size() - s.size(), s.size(), s) == 0;
    };
    Init init = Init::kZeros;
    if (ends_with(".gain")) init = Init::kOnes;
    else if (n == "projector.down.weight") init = Init::kZeros;
    else if (ends_with("embedding") || ends_with(".weight")) init = Init::kNormal;
    fill(p.tensor, init, rng);
  }
}

template <typename T>
std::vector<Tensor<T>> Model<T>::param_tensors() const {
  std::vector<Tensor<T>> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.tensor);
  return out;
}

template <typename T>
void Model<T>::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

template <typename T>
Tensor<T> Model<T>::encode(const IdMatrix& gapped) const {
  if (!config_.has_encoder()) throw std::logic_error(to_string(config_.kind) + " has no encoder");
  for (int id : gapped.ids) {
    if (id < 0 || id > config_.mask_id()) {
      throw std::out_of_range("encoder id " + std::to_string(id) + " outside [0, V+1]");
    }
  }
  return encoder_.forward(embedding_lookup(encoder_embedding_, gapped));
}

template <typename T>
Tensor<T> Model<T>::project(const Tensor<T>& encoder_out, const Tensor<T>& decoder_emb) const {
  Tensor<T> aggregated = encoder_out.defined() ? add(encoder_out, decoder_emb) : decoder_emb;
  return has_projector_ ? projector_.forward(aggregated) : aggregated;
}

template <typename T>
Tensor<T> Model<T>::decode(const Tensor<T>& projected) const {
  if (!config_.has_decoder()) throw std::logic_error(to_string(config_.kind) + " has no decoder");
  return decoder_.forward(projected);
}

template <typename T>
Tensor<T> Model<T>::logits(const Tensor<T>& hidden) const {
  return pointwise(hidden, head_weight_, head_bias_);
}

template <typename T>
Tensor<T> Model<T>::decoder_input(const IdMatrix& x, const IdMatrix* gapped,
                                  bool zero_encoder) const {
  for (int id : x.ids) {
    if (id < 0 || id > config_.vocab) {
      throw std::out_of_range("decoder id " + std::to_string(id) + " outside [0, V]");
    }
  }
  auto decoder_emb = embedding_lookup(decoder_embedding_, x);
  Tensor<T> encoder_out;
  if (zero_encoder) {
    encoder_out = Tensor<T>::zeros(decoder_emb.shape());
  } else if (gapped != nullptr) {
    encoder_out = encode(*gapped);
  }
  return project(encoder_out, decoder_emb);
}

template <typename T>
SiteLogits<T> Model<T>::grec_site_logits(const SessionBatch& batch,
                                         std::span<const MaskPlan> plans,
                                         bool zero_encoder) const {
  if (config_.kind != ModelKind::kGRec) throw std::logic_error("grec loss on a non-GRec model");
  if (plans.size() != batch.size()) throw std::invalid_argument("one mask plan per row required");
  const std::size_t t = batch.length();
  IdMatrix gapped(batch.size(), t);
  SiteLogits<T> out;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& plan = plans[b];
    if (plan.gapped.size() != t) throw std::invalid_argument("mask plan length mismatch");
    std::copy(plan.gapped.begin(), plan.gapped.end(), gapped.row(b).begin());
    for (std::size_t i = 0; i < plan.count(); ++i) {
      const std::size_t pos = plan.positions[i];
      // The site predicting position pos is the decoder state one step left.
      if (pos <= first_valid_column(batch, b)) {
        throw std::invalid_argument("gap at the first valid position has no prediction site");
      }
      out.sites.push_back(b * t + pos - 1);
      out.targets.push_back(plan.targets[i]);
    }
  }
  auto hidden = decode(decoder_input(batch.ids, &gapped, zero_encoder));
  out.logits = logits(gather_positions(hidden, std::span<const std::size_t>(out.sites)));
  return out;
}

template <typename T>
SiteLogits<T> Model<T>::nextitnet_site_logits(const SessionBatch& batch) const {
  if (!config_.has_decoder() || config_.kind == ModelKind::kTNextItNet) {
    throw std::logic_error("next-position loss needs a single-direction decoder");
  }
  SiteLogits<T> out;
  next_position_sites(batch.ids, out.sites, out.targets);
  auto hidden = decode(decoder_input(batch.ids, nullptr));
  out.logits = logits(gather_positions(hidden, std::span<const std::size_t>(out.sites)));
  return out;
}

template <typename T>
SiteLogits<T> Model<T>::encoder_only_site_logits(const SessionBatch& batch,
                                                 std::span<const MaskPlan> plans) const {
  if (config_.kind != ModelKind::kEncoderOnly) throw std::logic_error("encoder-only loss on another kind");
  if (plans.size() != batch.size()) throw std::invalid_argument("one mask plan per row required");
  const std::size_t t = batch.length();
  IdMatrix gapped(batch.size(), t);
  SiteLogits<T> out;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    std::copy(plans[b].gapped.begin(), plans[b].gapped.end(), gapped.row(b).begin());
    for (std::size_t i = 0; i < plans[b].count(); ++i) {
      out.sites.push_back(b * t + plans[b].positions[i]);
      out.targets.push_back(plans[b].targets[i]);
    }
  }
  auto hidden = encode(gapped);
  out.logits = logits(gather_positions(hidden, std::span<const std::size_t>(out.sites)));
  return out;
}

template <typename T>
Tensor<T> Model<T>::grec_loss(const SessionBatch& batch, std::span<const MaskPlan> plans,
                              bool zero_encoder) const {
  auto site = grec_site_logits(batch, plans, zero_encoder);
  return masked_softmax_xent(site.logits, std::span<const int>(site.targets));
}

template <typename T>
Tensor<T> Model<T>::nextitnet_loss(const SessionBatch& batch) const {
  auto site = nextitnet_site_logits(batch);
  return masked_softmax_xent(site.logits, std::span<const int>(site.targets));
}

template <typename T>
Tensor<T> Model<T>::backward_direction_hidden(const IdMatrix& reversed) const {
  return backward_.forward(embedding_lookup(decoder_embedding_, reversed));
}

template <typename T>
Tensor<T> Model<T>::tnextitnet_loss(const SessionBatch& batch) const {
  if (config_.kind != ModelKind::kTNextItNet) throw std::logic_error("two-way loss on another kind");
  const std::size_t d = config_.d;

  std::vector<std::size_t> fwd_sites, bwd_sites;
  std::vector<int> fwd_targets, bwd_targets;
  next_position_sites(batch.ids, fwd_sites, fwd_targets);
  const IdMatrix reversed = reverse_valid(batch.ids);
  next_position_sites(reversed, bwd_sites, bwd_targets);

  // Each direction fills its own half of the concatenated head input.
  auto forward_hidden = decoder_.forward(embedding_lookup(decoder_embedding_, batch.ids));
  auto fwd = gather_positions(forward_hidden, std::span<const std::size_t>(fwd_sites));
  fwd = concat_last(fwd, Tensor<T>::zeros({fwd_sites.size(), d}));

  auto backward_hidden = backward_direction_hidden(reversed);
  auto bwd = gather_positions(backward_hidden, std::span<const std::size_t>(bwd_sites));
  bwd = concat_last(Tensor<T>::zeros({bwd_sites.size(), d}), bwd);

  auto fwd_loss = masked_softmax_xent(logits(fwd), std::span<const int>(fwd_targets));
  auto bwd_loss = masked_softmax_xent(logits(bwd), std::span<const int>(bwd_targets));
  return add(fwd_loss, bwd_loss);
}

template <typename T>
Tensor<T> Model<T>::encoder_only_loss(const SessionBatch& batch,
                                      std::span<const MaskPlan> plans) const {
  auto site = encoder_only_site_logits(batch, plans);
  return masked_softmax_xent(site.logits, std::span<const int>(site.targets));
}

template <typename T>
std::vector<MaskPlan> Model<T>::sample_plans(const SessionBatch& batch, std::uint64_t seed,
                                             std::uint64_t epoch) const {
  std::vector<MaskPlan> plans;
  plans.reserve(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    Rng rng(derive_seed(seed, Stream::kMask, epoch, batch.row_index[b]));
    plans.push_back(sample_gaps(batch.ids.row(b), batch.valid_len[b], config_.gamma,
                                config_.mask_id(), rng));
  }
  return plans;
}

template <typename T>
Tensor<T> Model<T>::loss(const SessionBatch& batch, std::uint64_t seed,
                         std::uint64_t epoch) const {
  switch (config_.kind) {
    case ModelKind::kGRec: {
      auto plans = sample_plans(batch, seed, epoch);
      return grec_loss(batch, plans);
    }
    case ModelKind::kEncoderOnly: {
      auto plans = sample_plans(batch, seed, epoch);
      return encoder_only_loss(batch, plans);
    }
    case ModelKind::kNextItNet:
    case ModelKind::kNextItNetPlus:
      return nextitnet_loss(batch);
    case ModelKind::kTNextItNet:
      return tnextitnet_loss(batch);
    case ModelKind::kMostPop:
      break;
  }
  throw std::logic_error("no trainable objective for " + to_string(config_.kind));
}

template <typename T>
std::vector<int> Model<T>::inference_row(std::span<const int> prefix) const {
  if (prefix.empty()) throw std::invalid_argument("inference needs a nonempty prefix");
  for (int id : prefix) {
    if (id < 1 || id > config_.vocab) {
      throw std::out_of_range("prefix item " + std::to_string(id) + " is not in [1, V]");
    }
  }
  const std::size_t t = config_.length;
  const bool trailing_mask = config_.kind == ModelKind::kEncoderOnly;
  const std::size_t room = trailing_mask ? t - 1 : t;
  const std::size_t keep = std::min(room, prefix.size());
  std::vector<int> row(t, kPad);
  std::copy(prefix.end() - keep, prefix.end(), row.end() - keep - (trailing_mask ? 1 : 0));
  if (trailing_mask) row.back() = config_.mask_id();
  return row;
}

template <typename T>
std::vector<T> Model<T>::next_item_logits(std::span<const std::vector<int>> prefixes) const {
  NoGradGuard no_grad;
  const std::size_t t = config_.length, B = prefixes.size();
  if (B == 0) return {};
  IdMatrix ids(B, t);
  for (std::size_t b = 0; b < B; ++b) {
    auto row = inference_row(prefixes[b]);
    std::copy(row.begin(), row.end(), ids.row(b).begin());
  }
  std::vector<std::size_t> last(B);
  for (std::size_t b = 0; b < B; ++b) last[b] = b * t + t - 1;

  Tensor<T> hidden;
  switch (config_.kind) {
    case ModelKind::kGRec:
      // The encoder reads the prefix itself; no gaps at generation time.
      hidden = decode(decoder_input(ids, &ids));
      break;
    case ModelKind::kNextItNet:
    case ModelKind::kNextItNetPlus:
      hidden = decode(decoder_input(ids, nullptr));
      break;
    case ModelKind::kTNextItNet:
      hidden = decoder_.forward(embedding_lookup(decoder_embedding_, ids));
      break;
    case ModelKind::kEncoderOnly:
      hidden = encode(ids);
      break;
    case ModelKind::kMostPop:
      throw std::logic_error("MostPop is not a neural model");
  }
  auto picked = gather_positions(hidden, std::span<const std::size_t>(last));
  if (config_.kind == ModelKind::kTNextItNet) {
    picked = concat_last(picked, Tensor<T>::zeros({B, config_.d}));
  }
  auto out = logits(picked);
  return {out.data().begin(), out.data().end()};
}

template <typename T>
std::vector<std::vector<T>> Model<T>::snapshot() const {
  std::vector<std::vector<T>> values;
  values.reserve(params_.size());
  for (const auto& p : params_) values.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return values;
}

template <typename T>
void Model<T>::restore(const std::vector<std::vector<T>>& values) {
  if (values.size() != params_.size()) throw std::invalid_argument("snapshot parameter count mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto dst = params_[i].tensor.mutable_data();
    if (values[i].size() != dst.size()) throw std::invalid_argument("snapshot shape mismatch for " + params_[i].name);
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

IdMatrix reverse_valid(const IdMatrix& ids) {
  IdMatrix out = ids;
  for (std::size_t b = 0; b < ids.rows; ++b) {
    auto row = out.row(b);
    const std::size_t first = row.size() - valid_length(row);
    std::reverse(row.begin() + static_cast<long>(first), row.end());
  }
  return out;
}

std::vector<Session> nextitnet_plus_expand(std::span<const Session> rows) {
  std::vector<Session> out;
  out.reserve(rows.size() * 2);
  for (const auto& row : rows) out.push_back(row);
  for (const auto& row : rows) {
    Session reversed = row;
    const std::size_t first = row.size() - valid_length(row);
    std::reverse(reversed.begin() + static_cast<long>(first), reversed.end());
    out.push_back(std::move(reversed));
  }
  return out;
}

MostPop::MostPop(std::span<const Session> train_rows, int vocab)
    : vocab_(vocab), scores_(static_cast<std::size_t>(vocab) + 1, 0.0) {
  if (vocab < 1) throw std::invalid_argument("MostPop needs V >= 1");
  for (const auto& row : train_rows) {
    for (int id : row) {
      if (id == kPad) continue;
      if (id < 1 || id > vocab) throw std::out_of_range("MostPop: item outside [1, V]");
      scores_[id] += 1.0;
    }
  }
  scores_[kPad] = -1.0;
}

std::vector<int> MostPop::ranking() const {
  std::vector<int> out;
  for (const auto& r : top_n(scores_, vocab_, vocab_)) out.push_back(r.item);
  return out;
}

std::vector<RankedItem> top_n(std::span<const double> scores, int vocab, int n) {
  if (n < 1 || n > vocab) {
    throw std::invalid_argument("top-N needs 1 <= N <= V (N=" + std::to_string(n) +
                                ", V=" + std::to_string(vocab) + ")");
  }
  if (scores.size() < static_cast<std::size_t>(vocab) + 1) {
    throw std::invalid_argument("score vector shorter than V+1");
  }
  std::vector<int> items(vocab);
  for (int i = 0; i < vocab; ++i) items[i] = i + 1;
  std::partial_sort(items.begin(), items.begin() + n, items.end(), [&](int a, int b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
  });
  std::vector<RankedItem> out;
  for (int i = 0; i < n; ++i) out.push_back({items[i], scores[items[i]]});
  return out;
}

template struct ResidualBlock<float>;
template struct ResidualBlock<double>;
template struct ConvStack<float>;
template struct ConvStack<double>;
template struct Projector<float>;
template struct Projector<double>;
template class Model<float>;
template class Model<double>;

}  // namespace grec
