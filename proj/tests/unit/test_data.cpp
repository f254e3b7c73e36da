#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "grec/data.hpp"

using namespace grec;
namespace fs = std::filesystem;

namespace {

std::vector<RawEvent> events_with_counts(const std::map<std::string, int>& counts) {
  std::vector<RawEvent> out;
  std::int64_t ts = 0;
  for (const auto& [item, n] : counts) {
    for (int i = 0; i < n; ++i) out.push_back({"u" + std::to_string(i % 3), item, ts++});
  }
  return out;
}

std::vector<RawEvent> stream(const std::string& user, int n) {
  std::vector<RawEvent> out;
  for (int i = 0; i < n; ++i) out.push_back({user, "i" + std::to_string(i + 1), i});
  return out;
}

std::vector<Session> numbered_rows(std::size_t n, std::size_t k = 4) {
  std::vector<Session> rows;
  for (std::size_t i = 0; i < n; ++i) rows.push_back(Session(k, static_cast<int>(i + 1)));
  return rows;
}

fs::path temp_path(const std::string& name) {
  auto dir = fs::temp_directory_path() / "grec_test_data";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("vocabulary threshold") {
  const auto events = events_with_counts({{"a", 25}, {"b", 19}, {"c", 20}});
  const auto vocab = Vocabulary::build(events, 20);
  CHECK(vocab.size() == 2);
  CHECK(vocab.index_of("a") == 1);
  CHECK(vocab.index_of("c") == 2);
  CHECK_FALSE(vocab.index_of("b").has_value());
  CHECK(vocab.pad() == 0);
  CHECK(vocab.mask() == 3);

  CHECK(Vocabulary::build(events, 1).size() == 3);
  CHECK_THROWS_WITH_AS(Vocabulary::build(events, 26), doctest::Contains("empty vocabulary"),
                       std::runtime_error);
}

TEST_CASE("vocabulary follows first appearance and round-trips") {
  std::vector<RawEvent> events{{"u", "z", 0}, {"u", "x", 1}, {"v", "z", 2}, {"v", "y", 3}};
  const auto vocab = Vocabulary::build(events, 1);
  CHECK(vocab.item_at(1) == "z");
  CHECK(vocab.item_at(2) == "x");
  CHECK(vocab.item_at(3) == "y");
  for (int i = 1; i <= vocab.size(); ++i) CHECK(vocab.index_of(vocab.item_at(i)) == i);

  const auto path = temp_path("vocab.tsv").string();
  vocab.save(path);
  const auto loaded = Vocabulary::load(path);
  REQUIRE(loaded.size() == 3);
  for (int i = 1; i <= 3; ++i) CHECK(loaded.item_at(i) == vocab.item_at(i));
}

TEST_CASE("segmentation") {
  SUBCASE("7 items, k=3, l=2") {
    const auto ev = stream("u", 7);
    const auto vocab = Vocabulary::build(ev, 1);
    const auto rows = segment_sessions(ev, vocab, 3, 2);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == Session{1, 2, 3});
    CHECK(rows[1] == Session{4, 5, 6});
  }
  SUBCASE("2 items, k=3, l=2 is left-padded") {
    const auto ev = stream("u", 2);
    const auto rows = segment_sessions(ev, Vocabulary::build(ev, 1), 3, 2);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0] == Session{0, 1, 2});
  }
  SUBCASE("exactly k items") {
    const auto ev = stream("u", 3);
    const auto rows = segment_sessions(ev, Vocabulary::build(ev, 1), 3, 2);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0] == Session{1, 2, 3});
  }
  SUBCASE("chronological order per user, users in first-appearance order") {
    std::vector<RawEvent> ev{{"b", "x", 5}, {"a", "y", 9}, {"b", "y", 1}, {"a", "x", 2}};
    const auto vocab = Vocabulary::build(ev, 1);  // x=1, y=2
    const auto rows = segment_sessions(ev, vocab, 2, 1);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == Session{2, 1});  // user b: y@1, x@5
    CHECK(rows[1] == Session{1, 2});  // user a: x@2, y@9
  }
  SUBCASE("filtered items are dropped before chunking") {
    std::vector<RawEvent> ev{{"u", "a", 0}, {"u", "rare", 1}, {"u", "a", 2}, {"u", "b", 3},
                             {"u", "b", 4}};
    const auto rows = segment_sessions(ev, Vocabulary::build(ev, 2), 4, 1);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0] == Session{1, 1, 2, 2});
  }
}

TEST_CASE("valid length") {
  CHECK(valid_length(Session{0, 0, 3, 4}) == 2);
  CHECK(valid_length(Session{1, 2}) == 2);
  CHECK(valid_length(Session{0, 0}) == 0);
  CHECK_THROWS_AS(valid_length(Session{0, 3, 0, 4}), std::invalid_argument);
}

TEST_CASE("splits") {
  const auto ten = split_dataset(numbered_rows(10), {0.8, 0.1, 0.1}, 1);
  CHECK(ten.train.size() == 8);
  CHECK(ten.valid.size() == 1);
  CHECK(ten.test.size() == 1);

  const auto a = split_dataset(numbered_rows(1000), {0.8, 0.1, 0.1}, 7);
  const auto b = split_dataset(numbered_rows(1000), {0.8, 0.1, 0.1}, 7);
  const auto c = split_dataset(numbered_rows(1000), {0.8, 0.1, 0.1}, 8);
  CHECK(a.train == b.train);
  CHECK(a.valid == b.valid);
  CHECK(a.test == b.test);
  CHECK(a.train != c.train);

  std::multiset<Session> all(a.train.begin(), a.train.end());
  all.insert(a.valid.begin(), a.valid.end());
  all.insert(a.test.begin(), a.test.end());
  const auto original = numbered_rows(1000);
  CHECK(all == std::multiset<Session>(original.begin(), original.end()));

  CHECK_THROWS_AS(split_dataset(numbered_rows(2), {0.8, 0.1, 0.1}, 1), std::invalid_argument);

  PrepConfig bad;
  bad.l = 40;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  PrepConfig fractions;
  fractions.fractions = {0.5, 0.1, 0.1};
  CHECK_THROWS_AS(fractions.validate(), std::invalid_argument);
}

TEST_CASE("synthetic markov corpus") {
  SynthSpec spec;
  spec.vocab = 50;
  spec.sessions = 600;
  spec.length = 20;
  spec.seed = 5;

  SUBCASE("deterministic chain is predicted perfectly by its successor map") {
    spec.successor_prob = 1.0;
    const auto corpus = generate_synthetic(spec);
    std::size_t hits = 0, total = 0;
    for (const auto& row : corpus.rows) {
      for (std::size_t i = 0; i + 1 < row.size(); ++i, ++total) {
        hits += corpus.successor[row[i]] == row[i + 1];
      }
    }
    CHECK(hits == total);
    // The successor map is one cycle through every item.
    std::set<int> seen;
    int item = 1;
    for (int i = 0; i < spec.vocab; ++i) {
      seen.insert(item);
      item = corpus.successor[item];
    }
    CHECK(item == 1);
    CHECK(seen.size() == static_cast<std::size_t>(spec.vocab));
  }
  SUBCASE("planted successor frequency") {
    const auto corpus = generate_synthetic(spec);
    std::size_t hits = 0, total = 0;
    for (const auto& row : corpus.rows) {
      for (std::size_t i = 0; i + 1 < row.size() && total < 10000; ++i, ++total) {
        hits += corpus.successor[row[i]] == row[i + 1];
      }
    }
    REQUIRE(total == 10000);
    CHECK(std::abs(static_cast<double>(hits) / total - 0.8) < 0.03);
  }
  SUBCASE("reproducible and well formed") {
    const auto a = generate_synthetic(spec), b = generate_synthetic(spec);
    CHECK(a.rows == b.rows);
    for (const auto& row : a.rows) {
      CHECK(row.size() == spec.length);
      for (int id : row) CHECK((id >= 1 && id <= spec.vocab));
    }
    spec.seed = 6;
    CHECK(generate_synthetic(spec).rows != a.rows);
  }
  SUBCASE("errors") {
    spec.vocab = 3;
    CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
  }
}

TEST_CASE("synthetic basket-mixed corpus") {
  SynthSpec spec;
  spec.vocab = 100;
  spec.sessions = 1000;
  spec.length = 20;
  spec.regime = SynthRegime::kBasketMixed;
  spec.seed = 13;
  const auto corpus = generate_synthetic(spec);

  std::size_t triggers = 0;
  for (const auto& b : corpus.basket) triggers += !b.empty();
  CHECK(triggers == 20);

  std::map<int, std::set<std::vector<int>>> orders;
  for (const auto& row : corpus.rows) {
    for (std::size_t i = 0; i + 3 < row.size(); ++i) {
      const auto& basket = corpus.basket[row[i]];
      if (basket.empty()) continue;
      std::vector<int> next(row.begin() + i + 1, row.begin() + i + 4);
      orders[row[i]].insert(next);
      std::sort(next.begin(), next.end());
      REQUIRE(next == basket);
      i += 3;
    }
  }
  std::size_t varied = 0;
  for (const auto& [trigger, seen] : orders) varied += seen.size() >= 2;
  CHECK(varied == orders.size());
  CHECK(!orders.empty());
}

TEST_CASE("batch iteration") {
  const auto rows = numbered_rows(10);
  BatchIterator it(rows, 4, 1);
  std::vector<std::size_t> sizes;
  std::multiset<std::size_t> seen;
  while (auto batch = it.next()) {
    sizes.push_back(batch->size());
    for (auto r : batch->row_index) seen.insert(r);
  }
  CHECK(sizes == std::vector<std::size_t>{4, 4, 2});
  CHECK(seen.size() == 10);
  CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == 10);
  CHECK(it.batch_count() == 3);

  auto order = [&](std::uint64_t seed) {
    BatchIterator b(rows, 3, seed);
    std::vector<std::size_t> out;
    while (auto batch = b.next()) out.insert(out.end(), batch->row_index.begin(), batch->row_index.end());
    return out;
  };
  CHECK(order(4) == order(4));
  CHECK(order(4) != order(5));

  BatchIterator single(rows, 64, 1);
  auto only = single.next();
  REQUIRE(only.has_value());
  CHECK(only->size() == 10);
  CHECK_FALSE(single.next().has_value());
  CHECK_THROWS_AS(BatchIterator(rows, 0, 1), std::invalid_argument);

  std::vector<Session> padded{{0, 0, 3, 4}, {1, 2, 3, 4}};
  const std::vector<std::size_t> idx{0, 1};
  const auto batch = make_batch(padded, idx);
  CHECK(batch.valid_len == std::vector<std::size_t>{2, 4});
  CHECK(batch.ids.at(0, 2) == 3);
}

TEST_CASE("session and raw files") {
  const auto path = temp_path("sessions.txt").string();
  std::vector<Session> rows{{0, 1, 2}, {3, 4, 5}};
  write_sessions(path, rows, 3, 5);
  const auto file = read_sessions(path);
  CHECK(file.k == 3);
  CHECK(file.vocab == 5);
  CHECK(file.rows == rows);

  {
    std::ofstream out(path);
    out << "#k=3 V=5\n0 1 9\n";
  }
  const std::string where = path + ":2";
  CHECK_THROWS_WITH(read_sessions(path), doctest::Contains(where.c_str()));
  {
    std::ofstream out(path);
    out << "0 1 2\n";
  }
  CHECK_THROWS_WITH(read_sessions(path), doctest::Contains("header"));

  const auto raw = temp_path("raw.tsv").string();
  {
    std::ofstream out(raw);
    out << "u1\ta\t10\nu1\tb\tnot-a-time\n";
  }
  const std::string raw_where = raw + ":2";
  CHECK_THROWS_WITH(read_raw_events(raw), doctest::Contains(raw_where.c_str()));
  {
    std::ofstream out(raw);
    out << "u1\ta\t10\nu2\tb\t3\n";
  }
  const auto events = read_raw_events(raw);
  REQUIRE(events.size() == 2);
  CHECK(events[1].user == "u2");
  CHECK(events[1].timestamp == 3);
  CHECK_THROWS(read_raw_events(temp_path("missing.tsv").string()));
}
