#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace grec {

// Single-ground-truth forms; rank is 1-based.
double mrr_at_n(std::size_t rank, std::size_t n);
double hr_at_n(std::size_t rank, std::size_t n);
double ndcg_at_n(std::size_t rank, std::size_t n);

// 1-based rank of `truth` among items 1..V: higher score first, equal
// scores ordered by ascending item index.
template <typename S>
std::size_t rank_of(std::span<const S> scores, int vocab, int truth);

struct EvalReport {
  std::string model;
  std::uint64_t seed = 0;
  int epoch = 0;
  std::size_t n_queries = 0;
  std::size_t n_skipped = 0;
  double mrr5 = 0, mrr20 = 0, hr5 = 0, hr20 = 0, ndcg5 = 0, ndcg20 = 0;

  bool cutoffs_monotone() const;
  std::string to_key_value() const;
  static std::string csv_header();
  std::string to_csv_row() const;
  static EvalReport from_key_value(const std::string& text);
};

/// Sums per-query metric contributions at cutoffs 5 and 20.
class MetricAccumulator {
 public:
  void add_rank(std::size_t rank);
  void add_skipped() { ++skipped_; }
  EvalReport report() const;

 private:
  std::size_t queries_ = 0;
  std::size_t skipped_ = 0;
  double mrr5_ = 0, mrr20_ = 0, hr5_ = 0, hr20_ = 0, ndcg5_ = 0, ndcg20_ = 0;
};

void save_report(const EvalReport& report, const std::string& path);

}  // namespace grec
