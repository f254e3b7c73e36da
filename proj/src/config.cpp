#include "grec/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace grec {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::ostringstream out;
  out << std::setprecision(10);
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i];
  return out.str();
}

std::size_t parse_size(const std::string& v) {
  if (v.empty() || v.front() == '-') throw std::invalid_argument("expected a non-negative integer");
  std::size_t used = 0;
  const auto out = std::stoull(v, &used);
  if (used != v.size()) throw std::invalid_argument("trailing characters");
  return out;
}

double parse_real(const std::string& v) {
  std::size_t used = 0;
  const double out = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument("trailing characters");
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("expected true or false");
}

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(10) << v;
  return out.str();
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"seed", [](RunConfig& c, const std::string& v) { c.seed = parse_size(v); },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      {"min_item_count",
       [](RunConfig& c, const std::string& v) { c.prep.min_item_count = parse_size(v); },
       [](const RunConfig& c) { return std::to_string(c.prep.min_item_count); }},
      {"k", [](RunConfig& c, const std::string& v) { c.prep.k = parse_size(v); },
       [](const RunConfig& c) { return std::to_string(c.prep.k); }},
      {"l", [](RunConfig& c, const std::string& v) { c.prep.l = parse_size(v); },
       [](const RunConfig& c) { return std::to_string(c.prep.l); }},
      {"split_fractions",
       [](RunConfig& c, const std::string& v) {
         const auto parts = split_list(v);
         if (parts.size() != 3) throw std::invalid_argument("expected three fractions");
         for (std::size_t i = 0; i < 3; ++i) c.prep.fractions[i] = parse_real(parts[i]);
       },
       [](const RunConfig& c) {
         return join(std::vector<double>(c.prep.fractions.begin(), c.prep.fractions.end()));
       }},
      {"synth.vocab",
       [](RunConfig& c, const std::string& v) { c.synth.vocab = static_cast<int>(parse_size(v)); },
       [](const RunConfig& c) { return std::to_string(c.synth.vocab); }},
      {"synth.sessions", [](RunConfig& c, const std::string& v) { c.synth.sessions = parse_size(v); },
       [](const RunConfig& c) { return std::to_string(c.synth.sessions); }},
      {"synth.length", [](RunConfig& c, const std::string& v) { c.synth.length = parse_size(v); },
       [](const RunConfig& c) { return std::to_string(c.synth.length); }},
      {"synth.regime", [](RunConfig& c, const std::string& v) { c.synth.regime = parse_regime(v); },
       [](const RunConfig& c) { return to_string(c.synth.regime); }},
      {"synth.successor_prob",
       [](RunConfig& c, const std::string& v) { c.synth.successor_prob = parse_real(v); },
       [](const RunConfig& c) { return fmt(c.synth.successor_prob); }},
      {"synth.basket_size",
       [](RunConfig& c, const std::string& v) { c.synth.basket_size = parse_size(v); },
       [](const RunConfig& c) { return std::to_string(c.synth.basket_size); }},
      {"synth.trigger_fraction",
       [](RunConfig& c, const std::string& v) { c.synth.trigger_fraction = parse_real(v); },
       [](const RunConfig& c) { return fmt(c.synth.trigger_fraction); }},
      {"model", [](RunConfig& c, const std::string& v) { c.model = parse_model_kind(v); },
       [](const RunConfig& c) { return to_string(c.model); }},
      {"d", [](RunConfig& c, const std::string& v) { c.d = parse_size(v); },
       [](const RunConfig& c) { return std::to_string(c.d); }},
      {"f", [](RunConfig& c, const std::string& v) { c.f = parse_size(v); },
       [](const RunConfig& c) { return std::to_string(c.f); }},
      {"kernel", [](RunConfig& c, const std::string& v) { c.kernel = parse_size(v); },
       [](const RunConfig& c) { return std::to_string(c.kernel); }},
      {"encoder_dilations",
       [](RunConfig& c, const std::string& v) {
         c.encoder_dilations.clear();
         for (const auto& p : split_list(v)) c.encoder_dilations.push_back(static_cast<int>(parse_size(p)));
       },
       [](const RunConfig& c) { return join(c.encoder_dilations); }},
      {"decoder_dilations",
       [](RunConfig& c, const std::string& v) {
         c.decoder_dilations.clear();
         for (const auto& p : split_list(v)) c.decoder_dilations.push_back(static_cast<int>(parse_size(p)));
       },
       [](const RunConfig& c) { return join(c.decoder_dilations); }},
      {"gamma", [](RunConfig& c, const std::string& v) { c.gamma = parse_real(v); },
       [](const RunConfig& c) { return fmt(c.gamma); }},
      {"projector",
       [](RunConfig& c, const std::string& v) {
         if (v != "auto" && v != "on" && v != "off") {
           throw std::invalid_argument("expected auto, on or off");
         }
         c.projector = v;
       },
       [](const RunConfig& c) { return c.projector; }},
      {"learning_rate",
       [](RunConfig& c, const std::string& v) { c.train.learning_rate = parse_real(v); },
       [](const RunConfig& c) { return fmt(c.train.learning_rate); }},
      {"batch_size", [](RunConfig& c, const std::string& v) { c.train.batch_size = parse_size(v); },
       [](const RunConfig& c) { return std::to_string(c.train.batch_size); }},
      {"max_epochs", [](RunConfig& c, const std::string& v) { c.train.max_epochs = parse_size(v); },
       [](const RunConfig& c) { return std::to_string(c.train.max_epochs); }},
      {"early_stop_patience",
       [](RunConfig& c, const std::string& v) { c.train.patience = parse_size(v); },
       [](const RunConfig& c) { return std::to_string(c.train.patience); }},
      {"max_steps", [](RunConfig& c, const std::string& v) { c.train.max_steps = parse_size(v); },
       [](const RunConfig& c) { return std::to_string(c.train.max_steps); }},
      {"restore_best",
       [](RunConfig& c, const std::string& v) { c.train.restore_best = parse_bool(v); },
       [](const RunConfig& c) { return std::string(c.train.restore_best ? "true" : "false"); }},
      {"verbose", [](RunConfig& c, const std::string& v) { c.train.verbose = parse_bool(v); },
       [](const RunConfig& c) { return std::string(c.train.verbose ? "true" : "false"); }},
      {"eval_cutoffs",
       [](RunConfig& c, const std::string& v) {
         std::vector<int> cut;
         for (const auto& p : split_list(v)) cut.push_back(static_cast<int>(parse_size(p)));
         if (cut != std::vector<int>{5, 20}) {
           throw std::invalid_argument("reports are fixed at cutoffs 5,20");
         }
         c.eval_cutoffs = cut;
       },
       [](const RunConfig& c) { return join(c.eval_cutoffs); }},
      {"ablate.gammas",
       [](RunConfig& c, const std::string& v) {
         c.ablate_gammas.clear();
         for (const auto& p : split_list(v)) c.ablate_gammas.push_back(parse_real(p));
       },
       [](const RunConfig& c) { return join(c.ablate_gammas); }},
      {"ablate.variants",
       [](RunConfig& c, const std::string& v) {
         static const std::vector<std::string> known = {"grec", "grecn", "nextitnet",
                                                        "nextitnetp", "encoder_only"};
         c.ablate_variants.clear();
         for (const auto& p : split_list(v)) {
           if (std::find(known.begin(), known.end(), p) == known.end()) {
             throw std::invalid_argument("unknown ablation variant '" + p + "'");
           }
           c.ablate_variants.push_back(p);
         }
       },
       [](const RunConfig& c) { return join(c.ablate_variants); }},
      {"ablate.seeds",
       [](RunConfig& c, const std::string& v) {
         c.ablate_seeds.clear();
         for (const auto& p : split_list(v)) c.ablate_seeds.push_back(parse_size(p));
       },
       [](const RunConfig& c) { return join(c.ablate_seeds); }},
  };
  return table;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& table = fields();
  const auto it = std::find_if(table.begin(), table.end(),
                               [&](const Field& f) { return f.key == key; });
  if (it == table.end()) throw std::invalid_argument("unknown config key '" + key + "'");
  try {
    it->set(*this, trim(value));
  } catch (const std::exception& e) {
    throw std::invalid_argument("bad value '" + value + "' for config key '" + key +
                                "': " + e.what());
  }
}

void RunConfig::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw std::invalid_argument("expected key=value, got '" + assignment + "'");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file: " + path);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      set_assignment(line);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(path + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& f : fields()) out += f.key + "=" + f.get(*this) + "\n";
  return out;
}

void RunConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config snapshot: " + path);
  out << to_text();
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
  }();
  return names;
}

ModelConfig RunConfig::model_config(ModelKind kind, int vocab, std::size_t length) const {
  auto cfg = ModelConfig::defaults(kind, vocab, length);
  cfg.d = d;
  cfg.f = f;
  cfg.kernel = kernel;
  cfg.encoder_dilations = encoder_dilations;
  cfg.decoder_dilations = decoder_dilations;
  cfg.gamma = gamma;
  if (projector == "on") cfg.projector = true;
  if (projector == "off") cfg.projector = false;
  cfg.validate();
  return cfg;
}

TrainConfig RunConfig::train_config() const {
  auto cfg = train;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

void RunConfig::check_cutoffs(int vocab) const {
  for (int c : eval_cutoffs) {
    if (c > vocab) {
      throw std::invalid_argument("eval_cutoffs: cutoff " + std::to_string(c) +
                                  " exceeds the vocabulary size " + std::to_string(vocab));
    }
  }
}

}  // namespace grec
