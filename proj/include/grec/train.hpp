#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "grec/data.hpp"
#include "grec/metrics.hpp"
#include "grec/model.hpp"

namespace grec {

/// Anything that can score the next item for a batch of prefixes.
class NextItemScorer {
 public:
  virtual ~NextItemScorer() = default;
  virtual int vocab() const = 0;
  virtual std::string name() const = 0;
  // Row-major [B, V+1] scores; column 0 (PAD) is ignored by ranking.
  virtual std::vector<double> score(std::span<const std::vector<int>> prefixes) const = 0;
};

class ModelScorer : public NextItemScorer {
 public:
  explicit ModelScorer(const Model<float>& model) : model_(model) {}
  int vocab() const override { return model_.config().vocab; }
  std::string name() const override { return to_string(model_.config().kind); }
  std::vector<double> score(std::span<const std::vector<int>> prefixes) const override;

 private:
  const Model<float>& model_;
};

class MostPopScorer : public NextItemScorer {
 public:
  explicit MostPopScorer(const MostPop& baseline) : baseline_(baseline) {}
  int vocab() const override { return baseline_.vocab(); }
  std::string name() const override { return "mostpop"; }
  std::vector<double> score(std::span<const std::vector<int>> prefixes) const override;

 private:
  const MostPop& baseline_;
};

// Ranks the last valid item of every row given the items before it. Rows
// with fewer than two valid items are counted in n_skipped.
EvalReport evaluate_last_item(const NextItemScorer& scorer, std::span<const Session> rows,
                              std::size_t batch_size = 256);

std::vector<RankedItem> infer_next_top_n(const NextItemScorer& scorer,
                                         std::span<const int> prefix, int n);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;
  std::size_t max_epochs = 20;
  std::size_t patience = 2;  // epochs without validation MRR@5 improvement
  std::size_t max_steps = 0;  // 0 = no step cap
  std::uint64_t seed = 0;
  bool restore_best = true;  // false keeps the last epoch's parameters
  bool verbose = false;

  void validate() const;
};

struct TrainLogRow {
  std::size_t epoch = 0;
  std::size_t step = 0;      // optimizer steps so far
  double train_loss = 0.0;   // mean over the epoch's batches
  double val_mrr5 = 0.0;
};

struct TrainResult {
  std::unique_ptr<Model<float>> model;  // best epoch, or last if !restore_best
  std::vector<TrainLogRow> log;
  std::vector<double> step_losses;
  std::size_t best_epoch = 0;
  double best_val_mrr5 = -1.0;
  std::size_t steps = 0;
  std::size_t sessions_seen = 0;
};

// Adam training with per-epoch validation on MRR@5, best-epoch selection and
// early stopping. Gap-based models redraw their gaps every epoch.
TrainResult train(const ModelConfig& model_config, const TrainConfig& config,
                  std::span<const Session> train_rows, std::span<const Session> valid_rows);

void write_train_log(const std::string& path, std::span<const TrainLogRow> log);

// Fraction of prediction sites whose arg-max logit is the target: masked
// sites for gap-based models, next-position sites otherwise.
double site_accuracy(const Model<float>& model, std::span<const Session> rows,
                     std::uint64_t seed, std::uint64_t epoch);

}  // namespace grec
