#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "grec/random.hpp"
#include "grec/tensor.hpp"

namespace grec {

inline constexpr int kPad = 0;

// One fixed-length session row of item indices; PAD only as a left prefix.
using Session = std::vector<int>;

struct RawEvent {
  std::string user;
  std::string item;
  std::int64_t timestamp = 0;
};

// Tab-separated `user \t item \t timestamp` lines.
std::vector<RawEvent> read_raw_events(const std::string& path);

/// Bijection between raw item ids and indices 1..V. Index 0 is PAD and
/// V+1 is the encoder-only MASK symbol.
class Vocabulary {
 public:
  Vocabulary() = default;

  // Keeps items whose global count reaches `min_item_count`, indexed in
  // order of first appearance.
  static Vocabulary build(std::span<const RawEvent> events,
                          std::size_t min_item_count);
  static Vocabulary from_items(std::vector<std::string> items);

  int size() const { return static_cast<int>(items_.size()); }
  int pad() const { return kPad; }
  int mask() const { return size() + 1; }

  std::optional<int> index_of(const std::string& item) const;
  const std::string& item_at(int index) const;

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> items_;
  std::unordered_map<std::string, int> index_;
};

struct PrepConfig {
  std::size_t min_item_count = 20;
  std::size_t k = 30;  // session length
  std::size_t l = 10;  // shortest kept chunk
  std::array<double, 3> fractions{0.8, 0.1, 0.1};
  std::uint64_t seed = 0;

  void validate() const;
};

// Number of non-PAD positions. Throws if padding is not a contiguous prefix.
std::size_t valid_length(std::span<const int> row);

// Chops each user's chronological index stream into consecutive chunks of k.
// Only the last chunk may be short: it is left-padded when its length is at
// least l, otherwise dropped. Users are processed in first-appearance order.
std::vector<Session> segment_sessions(std::span<const RawEvent> events,
                                      const Vocabulary& vocab, std::size_t k,
                                      std::size_t l);

struct DatasetSplits {
  std::vector<Session> train;
  std::vector<Session> valid;
  std::vector<Session> test;
};

DatasetSplits split_dataset(std::vector<Session> rows,
                            std::array<double, 3> fractions, std::uint64_t seed);

enum class SynthRegime { kMarkov, kBasketMixed };

std::string to_string(SynthRegime regime);
SynthRegime parse_regime(const std::string& name);

struct SynthSpec {
  int vocab = 100;
  std::size_t sessions = 1000;
  std::size_t length = 20;
  SynthRegime regime = SynthRegime::kMarkov;
  double successor_prob = 0.8;
  std::size_t basket_size = 3;
  double trigger_fraction = 0.2;  // basket-mixed only
  std::uint64_t seed = 0;
};

/// Planted-pattern corpus plus the structure it was drawn from.
///
/// Markov: every item has one planted successor (the successor map is a single
/// cycle through all items); each step follows it with `successor_prob`, and
/// otherwise jumps uniformly to one of the other V-1 items.
///
/// Basket-mixed: a subset of items are triggers. The walk is the Markov chain
/// above until it emits a trigger; the trigger's fixed basket then follows in
/// a fresh random order, and the chain resumes from the last basket item.
struct SyntheticCorpus {
  std::vector<Session> rows;
  std::vector<int> successor;            // indexed by item, [0] unused
  std::vector<std::vector<int>> basket;  // empty for non-trigger items
};

SyntheticCorpus generate_synthetic(const SynthSpec& spec);

struct SessionBatch {
  IdMatrix ids;                         // [B, t]
  std::vector<std::size_t> valid_len;   // per row
  std::vector<std::size_t> row_index;   // position in the source row list

  std::size_t size() const { return ids.rows; }
  std::size_t length() const { return ids.cols; }
};

SessionBatch make_batch(std::span<const Session> rows,
                        std::span<const std::size_t> indices);

/// Seeded shuffle of the row list into batches of q; the last batch keeps
/// whatever remains.
class BatchIterator {
 public:
  BatchIterator(std::span<const Session> rows, std::size_t batch_size,
                std::uint64_t shuffle_seed, bool shuffle = true);

  std::optional<SessionBatch> next();
  std::size_t batch_count() const;

 private:
  std::span<const Session> rows_;
  std::size_t batch_size_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

struct SessionFile {
  std::size_t k = 0;
  int vocab = 0;
  std::vector<Session> rows;
};

// Header `#k=<k> V=<V>`, then one space-separated row per line.
void write_sessions(const std::string& path, std::span<const Session> rows,
                    std::size_t k, int vocab);
SessionFile read_sessions(const std::string& path);

}  // namespace grec
