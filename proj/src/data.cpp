#include "grec/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace grec {

std::vector<RawEvent> read_raw_events(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open raw events file: " + path);
  std::vector<RawEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected user<TAB>item<TAB>timestamp");
    }
    RawEvent ev;
    ev.user = line.substr(0, t1);
    ev.item = line.substr(t1 + 1, t2 - t1 - 1);
    try {
      std::size_t used = 0;
      const std::string ts = line.substr(t2 + 1);
      ev.timestamp = std::stoll(ts, &used);
      if (used != ts.size()) throw std::invalid_argument(ts);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": timestamp is not an integer");
    }
    events.push_back(std::move(ev));
  }
  return events;
}

Vocabulary Vocabulary::build(std::span<const RawEvent> events,
                             std::size_t min_item_count) {
  if (events.empty()) throw std::invalid_argument("no events to build a vocabulary from");
  std::unordered_map<std::string, std::size_t> counts;
  std::vector<std::string> first_seen;
  for (const auto& ev : events) {
    if (counts[ev.item]++ == 0) first_seen.push_back(ev.item);
  }
  std::vector<std::string> kept;
  for (auto& item : first_seen) {
    if (counts[item] >= min_item_count) kept.push_back(item);
  }
  if (kept.empty()) {
    throw std::runtime_error("empty vocabulary: no item appears at least " +
                             std::to_string(min_item_count) + " times");
  }
  return from_items(std::move(kept));
}

Vocabulary Vocabulary::from_items(std::vector<std::string> items) {
  Vocabulary vocab;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!vocab.index_.emplace(items[i], static_cast<int>(i) + 1).second) {
      throw std::invalid_argument("duplicate vocabulary item: " + items[i]);
    }
  }
  vocab.items_ = std::move(items);
  return vocab;
}

std::optional<int> Vocabulary::index_of(const std::string& item) const {
  auto it = index_.find(item);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::item_at(int index) const {
  if (index < 1 || index > size()) {
    throw std::out_of_range("vocabulary index " + std::to_string(index) +
                            " is not an item");
  }
  return items_[index - 1];
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocabulary: " + path);
  for (int i = 1; i <= size(); ++i) out << i << '\t' << items_[i - 1] << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary: " + path);
  std::vector<std::string> items;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos ||
        std::stoi(line.substr(0, tab)) != static_cast<int>(items.size()) + 1) {
      throw std::runtime_error("malformed vocabulary line in " + path + ": " + line);
    }
    items.push_back(line.substr(tab + 1));
  }
  return from_items(std::move(items));
}

void PrepConfig::validate() const {
  if (k == 0 || l == 0 || l > k) {
    throw std::invalid_argument("prep config needs 0 < l <= k (got k=" +
                                std::to_string(k) + ", l=" + std::to_string(l) + ")");
  }
  double total = 0;
  for (double f : fractions) {
    if (f < 0) throw std::invalid_argument("split fractions must be non-negative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must sum to 1");
  }
}

std::size_t valid_length(std::span<const int> row) {
  std::size_t pad = 0;
  while (pad < row.size() && row[pad] == kPad) ++pad;
  for (std::size_t i = pad; i < row.size(); ++i) {
    if (row[i] == kPad) {
      throw std::invalid_argument("PAD inside the valid region of a session row");
    }
  }
  return row.size() - pad;
}

std::vector<Session> segment_sessions(std::span<const RawEvent> events,
                                      const Vocabulary& vocab, std::size_t k,
                                      std::size_t l) {
  if (k == 0 || l == 0 || l > k) throw std::invalid_argument("segment_sessions needs 0 < l <= k");
  struct Stamped {
    std::int64_t timestamp;
    int index;
  };
  std::unordered_map<std::string, std::size_t> user_slot;
  std::vector<std::vector<Stamped>> streams;
  for (const auto& ev : events) {
    auto idx = vocab.index_of(ev.item);
    if (!idx) continue;
    auto [it, inserted] = user_slot.emplace(ev.user, streams.size());
    if (inserted) streams.emplace_back();
    streams[it->second].push_back({ev.timestamp, *idx});
  }

  std::vector<Session> rows;
  for (auto& stream : streams) {
    std::stable_sort(stream.begin(), stream.end(),
                     [](const Stamped& a, const Stamped& b) { return a.timestamp < b.timestamp; });
    for (std::size_t start = 0; start < stream.size(); start += k) {
      const std::size_t len = std::min(k, stream.size() - start);
      if (len < l) continue;
      Session row(k, kPad);
      for (std::size_t i = 0; i < len; ++i) row[k - len + i] = stream[start + i].index;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

DatasetSplits split_dataset(std::vector<Session> rows,
                            std::array<double, 3> fractions, std::uint64_t seed) {
  const std::size_t n = rows.size();
  if (n < 3) throw std::invalid_argument("split_dataset needs at least 3 rows, got " + std::to_string(n));
  Rng rng(derive_seed(seed, Stream::kSplit));
  std::shuffle(rows.begin(), rows.end(), rng);

  auto portion = [n](double f) { return static_cast<std::size_t>(std::llround(f * static_cast<double>(n))); };
  std::size_t n_valid = std::max<std::size_t>(1, portion(fractions[1]));
  std::size_t n_test = std::max<std::size_t>(1, portion(fractions[2]));
  if (n_valid + n_test >= n) n_valid = n_test = 1;
  const std::size_t n_train = n - n_valid - n_test;

  DatasetSplits out;
  out.train.assign(std::make_move_iterator(rows.begin()),
                   std::make_move_iterator(rows.begin() + n_train));
  out.valid.assign(std::make_move_iterator(rows.begin() + n_train),
                   std::make_move_iterator(rows.begin() + n_train + n_valid));
  out.test.assign(std::make_move_iterator(rows.begin() + n_train + n_valid),
                  std::make_move_iterator(rows.end()));
  return out;
}

std::string to_string(SynthRegime regime) {
  return regime == SynthRegime::kMarkov ? "markov" : "basket-mixed";
}

SynthRegime parse_regime(const std::string& name) {
  if (name == "markov") return SynthRegime::kMarkov;
  if (name == "basket-mixed" || name == "basket_mixed") return SynthRegime::kBasketMixed;
  throw std::invalid_argument("unknown synthetic regime: " + name);
}

SyntheticCorpus generate_synthetic(const SynthSpec& spec) {
  const int V = spec.vocab;
  if (V < 4) throw std::invalid_argument("synthetic corpus needs V >= 4");
  if (spec.length == 0) throw std::invalid_argument("synthetic session length must be >= 1");
  if (spec.successor_prob < 0 || spec.successor_prob > 1) {
    throw std::invalid_argument("successor_prob must lie in [0, 1]");
  }
  Rng rng(derive_seed(spec.seed, Stream::kSynth));

  SyntheticCorpus corpus;
  std::vector<int> cycle(V);
  std::iota(cycle.begin(), cycle.end(), 1);
  std::shuffle(cycle.begin(), cycle.end(), rng);
  corpus.successor.assign(V + 1, kPad);
  for (int i = 0; i < V; ++i) corpus.successor[cycle[i]] = cycle[(i + 1) % V];
  corpus.basket.assign(V + 1, {});

  if (spec.regime == SynthRegime::kBasketMixed) {
    const int triggers = std::max(1, static_cast<int>(std::lround(spec.trigger_fraction * V)));
    const int ordinary = V - triggers;
    if (spec.basket_size == 0 || static_cast<int>(spec.basket_size) > ordinary) {
      throw std::invalid_argument("basket size does not fit the non-trigger items");
    }
    std::vector<int> items(V);
    std::iota(items.begin(), items.end(), 1);
    std::shuffle(items.begin(), items.end(), rng);
    std::vector<int> pool(items.begin() + triggers, items.end());
    for (int i = 0; i < triggers; ++i) {
      std::vector<int> members = pool;
      std::shuffle(members.begin(), members.end(), rng);
      members.resize(spec.basket_size);
      std::sort(members.begin(), members.end());
      corpus.basket[items[i]] = std::move(members);
    }
  }

  std::uniform_int_distribution<int> any_item(1, V);
  std::uniform_int_distribution<int> other_item(1, V - 1);
  std::bernoulli_distribution follow(spec.successor_prob);
  auto step = [&](int current) {
    const int planted = corpus.successor[current];
    if (follow(rng)) return planted;
    int pick = other_item(rng);
    return pick >= planted ? pick + 1 : pick;
  };

  corpus.rows.reserve(spec.sessions);
  for (std::size_t s = 0; s < spec.sessions; ++s) {
    Session row;
    row.reserve(spec.length);
    int current = any_item(rng);
    row.push_back(current);
    while (row.size() < spec.length) {
      const auto& members = corpus.basket[current];
      if (!members.empty()) {
        std::vector<int> order = members;
        std::shuffle(order.begin(), order.end(), rng);
        for (int item : order) {
          if (row.size() == spec.length) break;
          row.push_back(item);
        }
        current = row.back();
        if (row.size() == spec.length) break;
      }
      current = step(current);
      row.push_back(current);
    }
    corpus.rows.push_back(std::move(row));
  }
  return corpus;
}

SessionBatch make_batch(std::span<const Session> rows,
                        std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("make_batch: empty index list");
  const std::size_t t = rows[indices[0]].size();
  SessionBatch batch;
  batch.ids = IdMatrix(indices.size(), t);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& row = rows[indices[b]];
    if (row.size() != t) throw std::invalid_argument("make_batch: ragged session rows");
    std::copy(row.begin(), row.end(), batch.ids.row(b).begin());
    batch.valid_len.push_back(valid_length(row));
    batch.row_index.push_back(indices[b]);
  }
  return batch;
}

BatchIterator::BatchIterator(std::span<const Session> rows, std::size_t batch_size,
                             std::uint64_t shuffle_seed, bool shuffle)
    : rows_(rows), batch_size_(batch_size), order_(rows.size()) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (shuffle) {
    Rng rng(shuffle_seed);
    std::shuffle(order_.begin(), order_.end(), rng);
  }
}

std::optional<SessionBatch> BatchIterator::next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  const std::size_t end = std::min(order_.size(), cursor_ + batch_size_);
  auto batch = make_batch(rows_, std::span(order_).subspan(cursor_, end - cursor_));
  cursor_ = end;
  return batch;
}

std::size_t BatchIterator::batch_count() const {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

void write_sessions(const std::string& path, std::span<const Session> rows,
                    std::size_t k, int vocab) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write sessions file: " + path);
  out << "#k=" << k << " V=" << vocab << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? " " : "") << row[i];
    out << '\n';
  }
}

SessionFile read_sessions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sessions file: " + path);
  SessionFile file;
  std::string header;
  if (!std::getline(in, header) ||
      std::sscanf(header.c_str(), "#k=%zu V=%d", &file.k, &file.vocab) != 2) {
    throw std::runtime_error(path + ": missing '#k=<k> V=<V>' header");
  }
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    Session row;
    int id = 0;
    while (fields >> id) {
      if (id < 0 || id > file.vocab) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": id " +
                                 std::to_string(id) + " outside [0, V]");
      }
      row.push_back(id);
    }
    if (!fields.eof() || row.size() != file.k) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected " + std::to_string(file.k) + " integer ids");
    }
    try {
      valid_length(row);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    file.rows.push_back(std::move(row));
  }
  return file;
}

}  // namespace grec
