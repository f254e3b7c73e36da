#include "grec/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "grec/adam.hpp"
#include "grec/random.hpp"

namespace grec {

std::vector<double> ModelScorer::score(std::span<const std::vector<int>> prefixes) const {
  auto logits = model_.next_item_logits(prefixes);
  return {logits.begin(), logits.end()};
}

std::vector<double> MostPopScorer::score(std::span<const std::vector<int>> prefixes) const {
  const auto& row = baseline_.scores();
  std::vector<double> out;
  out.reserve(prefixes.size() * row.size());
  for (std::size_t b = 0; b < prefixes.size(); ++b) out.insert(out.end(), row.begin(), row.end());
  return out;
}

EvalReport evaluate_last_item(const NextItemScorer& scorer, std::span<const Session> rows,
                              std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("evaluation batch size must be >= 1");
  const int V = scorer.vocab();
  const std::size_t width = static_cast<std::size_t>(V) + 1;
  MetricAccumulator acc;
  std::vector<std::vector<int>> prefixes;
  std::vector<int> truths;

  auto flush = [&] {
    if (prefixes.empty()) return;
    const auto scores = scorer.score(prefixes);
    for (std::size_t q = 0; q < prefixes.size(); ++q) {
      std::span<const double> row(scores.data() + q * width, width);
      acc.add_rank(rank_of<double>(row, V, truths[q]));
    }
    prefixes.clear();
    truths.clear();
  };

  for (const auto& row : rows) {
    const std::size_t valid = valid_length(row);
    if (valid < 2) {
      acc.add_skipped();
      continue;
    }
    prefixes.emplace_back(row.end() - static_cast<long>(valid), row.end() - 1);
    truths.push_back(row.back());
    if (prefixes.size() == batch_size) flush();
  }
  flush();
  auto report = acc.report();
  report.model = scorer.name();
  return report;
}

std::vector<RankedItem> infer_next_top_n(const NextItemScorer& scorer,
                                         std::span<const int> prefix, int n) {
  if (n < 1 || n > scorer.vocab()) {
    throw std::invalid_argument("top-N must satisfy 1 <= N <= V (N=" + std::to_string(n) +
                                ", V=" + std::to_string(scorer.vocab()) + ")");
  }
  std::vector<std::vector<int>> query{std::vector<int>(prefix.begin(), prefix.end())};
  const auto scores = scorer.score(query);
  return top_n(scores, scorer.vocab(), n);
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (max_epochs == 0) throw std::invalid_argument("max_epochs must be >= 1");
  if (patience == 0) throw std::invalid_argument("patience must be >= 1");
}

TrainResult train(const ModelConfig& model_config, const TrainConfig& config,
                  std::span<const Session> train_rows, std::span<const Session> valid_rows) {
  config.validate();
  if (model_config.kind == ModelKind::kMostPop) {
    throw std::invalid_argument("MostPop is fitted, not trained; use MostPop directly");
  }
  if (train_rows.empty() || valid_rows.empty()) {
    throw std::invalid_argument("training needs nonempty train and validation splits");
  }

  std::vector<Session> rows;
  for (const auto& row : train_rows) {
    if (valid_length(row) >= 2) rows.push_back(row);
  }
  if (model_config.kind == ModelKind::kNextItNetPlus) rows = nextitnet_plus_expand(rows);
  if (rows.empty()) throw std::invalid_argument("no training row has two or more items");

  TrainResult result;
  result.model = std::make_unique<Model<float>>(model_config, config.seed);
  Model<float>& model = *result.model;
  Adam<float> adam({.learning_rate = config.learning_rate});
  auto params = model.param_tensors();
  std::vector<std::vector<float>> best;
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    BatchIterator batches(rows, config.batch_size,
                          derive_seed(config.seed, Stream::kShuffle, epoch));
    double epoch_loss = 0.0;
    std::size_t epoch_batches = 0;
    bool capped = false;
    while (auto batch = batches.next()) {
      model.zero_grad();
      auto loss = model.loss(*batch, config.seed, epoch);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "non-finite training loss " << value << " at epoch " << epoch << ", step "
            << result.steps + 1 << " (" << to_string(model_config.kind) << ")";
        throw std::runtime_error(msg.str());
      }
      loss.backward();
      adam.step(params);
      ++result.steps;
      result.sessions_seen += batch->size();
      result.step_losses.push_back(value);
      epoch_loss += value;
      ++epoch_batches;
      if (config.max_steps && result.steps >= config.max_steps) {
        capped = true;
        break;
      }
    }

    const auto report = evaluate_last_item(ModelScorer(model), valid_rows);
    TrainLogRow row{epoch, result.steps, epoch_loss / static_cast<double>(epoch_batches),
                    report.mrr5};
    result.log.push_back(row);
    if (config.verbose) {
      std::cerr << to_string(model_config.kind) << " epoch " << epoch << " step " << row.step
                << " loss " << row.train_loss << " val MRR@5 " << row.val_mrr5 << '\n';
    }
    if (report.mrr5 > result.best_val_mrr5) {
      result.best_val_mrr5 = report.mrr5;
      result.best_epoch = epoch;
      best = model.snapshot();
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
    if (capped) break;
  }
  if (config.restore_best) model.restore(best);
  return result;
}

void write_train_log(const std::string& path, std::span<const TrainLogRow> log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write training log: " + path);
  out << "epoch,step,train_loss,val_mrr5\n" << std::setprecision(10);
  for (const auto& row : log) {
    out << row.epoch << ',' << row.step << ',' << row.train_loss << ',' << row.val_mrr5 << '\n';
  }
}

double site_accuracy(const Model<float>& model, std::span<const Session> rows,
                     std::uint64_t seed, std::uint64_t epoch) {
  NoGradGuard no_grad;
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (valid_length(rows[i]) >= 2) index.push_back(i);
  }
  if (index.empty()) return 0.0;
  const auto batch = make_batch(rows, index);
  const auto& cfg = model.config();

  SiteLogits<float> sites;
  switch (cfg.kind) {
    case ModelKind::kGRec:
      sites = model.grec_site_logits(batch, model.sample_plans(batch, seed, epoch));
      break;
    case ModelKind::kEncoderOnly:
      sites = model.encoder_only_site_logits(batch, model.sample_plans(batch, seed, epoch));
      break;
    case ModelKind::kNextItNet:
    case ModelKind::kNextItNetPlus:
      sites = model.nextitnet_site_logits(batch);
      break;
    default:
      throw std::invalid_argument("site accuracy is not defined for " + to_string(cfg.kind));
  }
  const std::size_t n = sites.logits.dim(1);
  std::size_t hits = 0;
  for (std::size_t m = 0; m < sites.targets.size(); ++m) {
    const float* row = sites.logits.data().data() + m * n;
    // Arg-max over items only.
    const auto best = std::max_element(row + 1, row + n) - row;
    if (best == sites.targets[m]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(sites.targets.size());
}

}  // namespace grec
