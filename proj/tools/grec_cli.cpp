// grec: data prep, synthetic corpora, training, evaluation, inference and
// ablations for the gap-filling encoder-decoder and its baselines.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "grec/checkpoint.hpp"
#include "grec/config.hpp"
#include "grec/data.hpp"
#include "grec/metrics.hpp"
#include "grec/model.hpp"
#include "grec/train.hpp"

namespace fs = std::filesystem;
using namespace grec;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

RunConfig resolve(const Common& common) {
  RunConfig cfg;
  if (!common.config_path.empty()) cfg.load_file(common.config_path);
  for (const auto& s : common.overrides) cfg.set_assignment(s);
  if (common.seed) cfg.seed = *common.seed;
  return cfg;
}

fs::path prepare_out(const Common& common, const RunConfig& cfg) {
  if (common.out_dir.empty()) throw std::invalid_argument("--out is required");
  fs::path out(common.out_dir);
  fs::create_directories(out);
  cfg.save((out / "resolved_config.txt").string());
  return out;
}

void add_common(CLI::App* cmd, Common& common, bool needs_out = true) {
  cmd->add_option("--config", common.config_path, "key=value configuration file");
  cmd->add_option("--set", common.overrides, "override a config key (key=value)")
      ->allow_extra_args(false);
  auto* out = cmd->add_option("--out", common.out_dir, "output directory");
  if (needs_out) out->required();
  cmd->add_option("--seed", common.seed, "root seed");
}

struct Splits {
  DatasetSplits rows;
  std::size_t k = 0;
  int vocab = 0;
};

Splits load_splits(const std::string& dir) {
  if (dir.empty()) throw std::invalid_argument("--data is required");
  Splits s;
  const fs::path root(dir);
  auto train = read_sessions((root / "train.txt").string());
  auto valid = read_sessions((root / "valid.txt").string());
  auto test = read_sessions((root / "test.txt").string());
  if (valid.k != train.k || test.k != train.k || valid.vocab != train.vocab ||
      test.vocab != train.vocab) {
    throw std::runtime_error(dir + ": split files disagree on k or V");
  }
  s.k = train.k;
  s.vocab = train.vocab;
  s.rows.train = std::move(train.rows);
  s.rows.valid = std::move(valid.rows);
  s.rows.test = std::move(test.rows);
  return s;
}

void write_splits(const fs::path& out, const DatasetSplits& splits, std::size_t k, int vocab) {
  write_sessions((out / "train.txt").string(), splits.train, k, vocab);
  write_sessions((out / "valid.txt").string(), splits.valid, k, vocab);
  write_sessions((out / "test.txt").string(), splits.test, k, vocab);
}

void print_counts(const DatasetSplits& splits, int vocab, std::size_t k) {
  std::cout << "sessions\titems\tk\ttrain\tvalid\ttest\n"
            << splits.train.size() + splits.valid.size() + splits.test.size() << '\t' << vocab
            << '\t' << k << '\t' << splits.train.size() << '\t' << splits.valid.size() << '\t'
            << splits.test.size() << '\n';
}

const std::vector<Session>& pick_split(const Splits& data, const std::string& name) {
  if (name == "test") return data.rows.test;
  if (name == "valid") return data.rows.valid;
  if (name == "train") return data.rows.train;
  throw std::invalid_argument("unknown split '" + name + "' (expected train, valid or test)");
}

void check_compatible(const ModelConfig& model, const Splits& data, const std::string& ckpt) {
  if (model.vocab != data.vocab || model.length != data.k) {
    throw std::runtime_error("checkpoint " + ckpt + " expects V=" + std::to_string(model.vocab) +
                             " t=" + std::to_string(model.length) + " but the data has V=" +
                             std::to_string(data.vocab) + " k=" + std::to_string(data.k));
  }
}

void emit_report(const EvalReport& report, const fs::path& out, const std::string& stem) {
  save_report(report, (out / (stem + ".txt")).string());
  std::ofstream csv(out / (stem + ".csv"));
  csv << EvalReport::csv_header() << '\n' << report.to_csv_row() << '\n';
  std::cout << report.to_key_value();
}

int cmd_prep(const Common& common, const std::string& raw) {
  auto cfg = resolve(common);
  cfg.prep.seed = cfg.seed;
  cfg.prep.validate();
  const auto events = read_raw_events(raw);
  const auto vocab = Vocabulary::build(events, cfg.prep.min_item_count);
  auto rows = segment_sessions(events, vocab, cfg.prep.k, cfg.prep.l);
  if (rows.empty()) throw std::runtime_error(raw + ": no session survives segmentation");
  const auto splits = split_dataset(std::move(rows), cfg.prep.fractions, cfg.seed);
  const auto out = prepare_out(common, cfg);
  write_splits(out, splits, cfg.prep.k, vocab.size());
  vocab.save((out / "vocab.tsv").string());
  print_counts(splits, vocab.size(), cfg.prep.k);
  return 0;
}

int cmd_synth(const Common& common) {
  auto cfg = resolve(common);
  cfg.synth.seed = cfg.seed;
  const auto corpus = generate_synthetic(cfg.synth);
  const auto splits = split_dataset(corpus.rows, cfg.prep.fractions, cfg.seed);
  const auto out = prepare_out(common, cfg);
  write_splits(out, splits, cfg.synth.length, cfg.synth.vocab);
  print_counts(splits, cfg.synth.vocab, cfg.synth.length);
  return 0;
}

EvalReport run_training(const RunConfig& cfg, ModelKind kind, const ModelConfig& model_cfg,
                        const Splits& data, const fs::path& out, const std::string& stem) {
  EvalReport report;
  if (kind == ModelKind::kMostPop) {
    const MostPop baseline(data.rows.train, data.vocab);
    report = evaluate_last_item(MostPopScorer(baseline), data.rows.test);
  } else {
    auto result = train(model_cfg, cfg.train_config(), data.rows.train, data.rows.valid);
    save_checkpoint(*result.model, (out / (stem + ".ckpt")).string());
    write_train_log((out / (stem + "_log.csv")).string(), result.log);
    report = evaluate_last_item(ModelScorer(*result.model), data.rows.test);
    report.epoch = static_cast<int>(result.best_epoch);
    std::cerr << stem << ": " << result.steps << " steps, " << result.sessions_seen
              << " sessions seen, best epoch " << result.best_epoch << '\n';
  }
  report.model = to_string(kind);
  report.seed = cfg.seed;
  return report;
}

int cmd_train(const Common& common, const std::string& data_dir, const std::string& model) {
  auto cfg = resolve(common);
  if (!model.empty()) cfg.model = parse_model_kind(model);
  const auto data = load_splits(data_dir);
  cfg.check_cutoffs(data.vocab);
  const auto model_cfg = cfg.model_config(data.vocab, data.k);
  const auto out = prepare_out(common, cfg);
  const auto report = run_training(cfg, cfg.model, model_cfg, data, out, "model");
  emit_report(report, out, "report");
  return 0;
}

int cmd_eval(const Common& common, const std::string& data_dir, const std::string& model,
             const std::string& checkpoint, const std::string& split) {
  auto cfg = resolve(common);
  if (!model.empty()) cfg.model = parse_model_kind(model);
  const auto data = load_splits(data_dir);
  cfg.check_cutoffs(data.vocab);
  const auto& rows = pick_split(data, split);
  EvalReport report;
  if (cfg.model == ModelKind::kMostPop) {
    const MostPop baseline(data.rows.train, data.vocab);
    report = evaluate_last_item(MostPopScorer(baseline), rows);
  } else {
    if (checkpoint.empty()) {
      throw std::invalid_argument("--checkpoint is required for model " + to_string(cfg.model));
    }
    const auto net = load_checkpoint(checkpoint);
    if (!model.empty() && net.config().kind != cfg.model) {
      throw std::runtime_error("checkpoint " + checkpoint + " holds a " +
                               to_string(net.config().kind) + " model, not " + model);
    }
    check_compatible(net.config(), data, checkpoint);
    report = evaluate_last_item(ModelScorer(net), rows);
  }
  report.model = to_string(cfg.model);
  report.seed = cfg.seed;
  const auto out = prepare_out(common, cfg);
  emit_report(report, out, "eval_" + split);
  return 0;
}

std::vector<int> parse_prefix(const std::string& text) {
  std::vector<int> ids;
  std::istringstream in(text);
  std::string token;
  while (in >> token) {
    try {
      std::size_t used = 0;
      ids.push_back(std::stoi(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw std::invalid_argument("--prefix: '" + token + "' is not an item index");
    }
  }
  if (ids.empty()) throw std::invalid_argument("--prefix is empty");
  return ids;
}

int cmd_infer(const Common& common, const std::string& data_dir, const std::string& model,
              const std::string& checkpoint, const std::string& prefix_text, int topn) {
  auto cfg = resolve(common);
  if (!model.empty()) cfg.model = parse_model_kind(model);
  const auto prefix = parse_prefix(prefix_text);
  std::vector<RankedItem> items;
  if (cfg.model == ModelKind::kMostPop) {
    const auto data = load_splits(data_dir);
    const MostPop baseline(data.rows.train, data.vocab);
    items = infer_next_top_n(MostPopScorer(baseline), prefix, topn);
  } else {
    if (checkpoint.empty()) {
      throw std::invalid_argument("--checkpoint is required for model " + to_string(cfg.model));
    }
    const auto net = load_checkpoint(checkpoint);
    items = infer_next_top_n(ModelScorer(net), prefix, topn);
  }
  if (!common.out_dir.empty()) prepare_out(common, cfg);
  std::cout << "rank\titem\tscore\n" << std::setprecision(8);
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::cout << i + 1 << '\t' << items[i].item << '\t' << items[i].score << '\n';
  }
  return 0;
}

struct AblationRow {
  std::string name;
  ModelConfig model;
};

std::vector<AblationRow> ablation_rows(const RunConfig& cfg, const Splits& data) {
  std::vector<AblationRow> rows;
  for (double gamma : cfg.ablate_gammas) {
    auto m = cfg.model_config(ModelKind::kGRec, data.vocab, data.k);
    m.gamma = gamma;
    m.validate();
    std::ostringstream name;
    name << "grec_gamma" << gamma;
    rows.push_back({name.str(), m});
  }
  for (const auto& v : cfg.ablate_variants) {
    const ModelKind kind = v == "grec" || v == "grecn" ? ModelKind::kGRec
                           : v == "encoder_only"        ? ModelKind::kEncoderOnly
                                                        : ModelKind::kNextItNet;
    auto m = cfg.model_config(kind, data.vocab, data.k);
    m.projector = v == "grec" || v == "nextitnetp";
    rows.push_back({v, m});
  }
  if (rows.empty()) {
    throw std::invalid_argument("empty configuration list: set ablate.gammas and/or ablate.variants");
  }
  return rows;
}

int cmd_ablate(const Common& common, const std::string& data_dir) {
  auto cfg = resolve(common);
  const auto data = load_splits(data_dir);
  cfg.check_cutoffs(data.vocab);
  const auto rows = ablation_rows(cfg, data);
  auto seeds = cfg.ablate_seeds;
  if (seeds.empty()) seeds.push_back(cfg.seed);
  const auto out = prepare_out(common, cfg);

  std::ofstream csv(out / "ablation.csv");
  if (!csv) throw std::runtime_error("cannot write " + (out / "ablation.csv").string());
  csv << "config,gamma,projector," << EvalReport::csv_header() << '\n';
  for (const auto& row : rows) {
    for (auto seed : seeds) {
      auto run = cfg;
      run.seed = seed;
      const std::string stem = row.name + "_seed" + std::to_string(seed);
      const auto report = run_training(run, row.model.kind, row.model, data, out, stem);
      csv << row.name << ',' << row.model.gamma << ',' << (row.model.uses_projector() ? 1 : 0)
          << ',' << report.to_csv_row() << '\n';
      csv.flush();
      std::cout << stem << " MRR@5=" << report.mrr5 << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gap-filling encoder-decoder for next-item recommendation"};
  app.require_subcommand(1);

  Common common;
  std::string raw, data_dir, model, checkpoint, prefix, split = "test";
  int topn = 10;

  auto* prep = app.add_subcommand("prep", "segment and split raw user/item/timestamp logs");
  add_common(prep, common);
  prep->add_option("--raw", raw, "tab-separated user, item, timestamp file")->required();

  auto* synth = app.add_subcommand("synth", "generate a synthetic session corpus");
  add_common(synth, common);

  auto* trn = app.add_subcommand("train", "train a model and report test metrics");
  add_common(trn, common);
  trn->add_option("--data", data_dir, "directory with train/valid/test.txt")->required();
  trn->add_option("--model", model, "grec|nextitnet|nextitnet_plus|tnextitnet|encoder_only|mostpop");

  auto* evl = app.add_subcommand("eval", "evaluate last-item metrics on a split");
  add_common(evl, common);
  evl->add_option("--data", data_dir, "directory with train/valid/test.txt")->required();
  evl->add_option("--model", model, "model kind");
  evl->add_option("--checkpoint", checkpoint, "checkpoint file");
  evl->add_option("--split", split, "train|valid|test");

  auto* inf = app.add_subcommand("infer", "print the top-N next items for a prefix");
  add_common(inf, common, false);
  inf->add_option("--data", data_dir, "data directory (mostpop only)");
  inf->add_option("--model", model, "model kind");
  inf->add_option("--checkpoint", checkpoint, "checkpoint file");
  inf->add_option("--prefix", prefix, "space-separated item indices")->required();
  inf->add_option("--topn", topn, "number of items to list");

  auto* abl = app.add_subcommand("ablate", "train a grid of configurations on paired seeds");
  add_common(abl, common);
  abl->add_option("--data", data_dir, "directory with train/valid/test.txt")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*prep) return cmd_prep(common, raw);
    if (*synth) return cmd_synth(common);
    if (*trn) return cmd_train(common, data_dir, model);
    if (*evl) return cmd_eval(common, data_dir, model, checkpoint, split);
    if (*inf) return cmd_infer(common, data_dir, model, checkpoint, prefix, topn);
    if (*abl) return cmd_ablate(common, data_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
