#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grec/data.hpp"
#include "grec/model.hpp"
#include "grec/train.hpp"

namespace grec {

/// Everything a CLI run can be configured with. Keys are flat; the file form
/// is one `key=value` per line with `#` comments.
struct RunConfig {
  std::uint64_t seed = 0;

  // data preparation
  PrepConfig prep;

  // synthetic corpus
  SynthSpec synth;

  // model
  ModelKind model = ModelKind::kGRec;
  std::size_t d = 64;
  std::size_t f = 128;
  std::size_t kernel = 3;
  std::vector<int> encoder_dilations{1, 2, 4, 8, 1, 2, 4, 8};
  std::vector<int> decoder_dilations{1, 2, 4, 8, 1, 2, 4, 8};
  double gamma = 0.5;
  std::string projector = "auto";  // auto | on | off

  // training
  TrainConfig train;
  std::vector<int> eval_cutoffs{5, 20};

  // ablation
  std::vector<double> ablate_gammas;
  std::vector<std::string> ablate_variants;
  std::vector<std::uint64_t> ablate_seeds;

  // Applies one `key=value`; unknown keys and unparsable values throw
  // std::invalid_argument naming the key.
  void set(const std::string& key, const std::string& value);
  void set_assignment(const std::string& assignment);

  void load_file(const std::string& path);
  std::string to_text() const;
  void save(const std::string& path) const;

  static const std::vector<std::string>& keys();

  // Model configuration for `kind` over a corpus of V items and length t.
  ModelConfig model_config(ModelKind kind, int vocab, std::size_t length) const;
  ModelConfig model_config(int vocab, std::size_t length) const {
    return model_config(model, vocab, length);
  }
  TrainConfig train_config() const;
  void check_cutoffs(int vocab) const;
};

}  // namespace grec
