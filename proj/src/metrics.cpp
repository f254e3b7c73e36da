#include "grec/metrics.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace grec {

double mrr_at_n(std::size_t rank, std::size_t n) {
  if (rank < 1) throw std::invalid_argument("rank is 1-based");
  return rank <= n ? 1.0 / static_cast<double>(rank) : 0.0;
}

double hr_at_n(std::size_t rank, std::size_t n) {
  if (rank < 1) throw std::invalid_argument("rank is 1-based");
  return rank <= n ? 1.0 : 0.0;
}

double ndcg_at_n(std::size_t rank, std::size_t n) {
  if (rank < 1) throw std::invalid_argument("rank is 1-based");
  return rank <= n ? 1.0 / std::log2(static_cast<double>(rank) + 1.0) : 0.0;
}

template <typename S>
std::size_t rank_of(std::span<const S> scores, int vocab, int truth) {
  if (truth < 1 || truth > vocab) throw std::out_of_range("ground truth is not an item");
  if (scores.size() < static_cast<std::size_t>(vocab) + 1) {
    throw std::invalid_argument("score vector shorter than V+1");
  }
  const S target = scores[truth];
  std::size_t ahead = 0;
  for (int j = 1; j <= vocab; ++j) {
    if (scores[j] > target || (scores[j] == target && j < truth)) ++ahead;
  }
  return ahead + 1;
}

template std::size_t rank_of<float>(std::span<const float>, int, int);
template std::size_t rank_of<double>(std::span<const double>, int, int);

bool EvalReport::cutoffs_monotone() const {
  return mrr5 <= mrr20 && hr5 <= hr20 && ndcg5 <= ndcg20;
}

std::string EvalReport::to_key_value() const {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "model=" << model << '\n'
      << "seed=" << seed << '\n'
      << "epoch=" << epoch << '\n'
      << "n_queries=" << n_queries << '\n'
      << "n_skipped=" << n_skipped << '\n'
      << "MRR@5=" << mrr5 << '\n'
      << "MRR@20=" << mrr20 << '\n'
      << "HR@5=" << hr5 << '\n'
      << "HR@20=" << hr20 << '\n'
      << "NDCG@5=" << ndcg5 << '\n'
      << "NDCG@20=" << ndcg20 << '\n';
  return out.str();
}

std::string EvalReport::csv_header() {
  return "model,seed,epoch,n_queries,n_skipped,MRR@5,MRR@20,HR@5,HR@20,NDCG@5,NDCG@20";
}

std::string EvalReport::to_csv_row() const {
  std::ostringstream out;
  out << std::setprecision(10);
  out << model << ',' << seed << ',' << epoch << ',' << n_queries << ',' << n_skipped << ','
      << mrr5 << ',' << mrr20 << ',' << hr5 << ',' << hr20 << ',' << ndcg5 << ',' << ndcg20;
  return out.str();
}

EvalReport EvalReport::from_key_value(const std::string& text) {
  EvalReport report;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "model") report.model = value;
    else if (key == "seed") report.seed = std::stoull(value);
    else if (key == "epoch") report.epoch = std::stoi(value);
    else if (key == "n_queries") report.n_queries = std::stoul(value);
    else if (key == "n_skipped") report.n_skipped = std::stoul(value);
    else if (key == "MRR@5") report.mrr5 = std::stod(value);
    else if (key == "MRR@20") report.mrr20 = std::stod(value);
    else if (key == "HR@5") report.hr5 = std::stod(value);
    else if (key == "HR@20") report.hr20 = std::stod(value);
    else if (key == "NDCG@5") report.ndcg5 = std::stod(value);
    else if (key == "NDCG@20") report.ndcg20 = std::stod(value);
    else throw std::invalid_argument("unknown report key: " + key);
  }
  return report;
}

void MetricAccumulator::add_rank(std::size_t rank) {
  ++queries_;
  mrr5_ += mrr_at_n(rank, 5);
  mrr20_ += mrr_at_n(rank, 20);
  hr5_ += hr_at_n(rank, 5);
  hr20_ += hr_at_n(rank, 20);
  ndcg5_ += ndcg_at_n(rank, 5);
  ndcg20_ += ndcg_at_n(rank, 20);
}

EvalReport MetricAccumulator::report() const {
  EvalReport r;
  r.n_queries = queries_;
  r.n_skipped = skipped_;
  if (queries_ == 0) return r;
  const double n = static_cast<double>(queries_);
  r.mrr5 = mrr5_ / n;
  r.mrr20 = mrr20_ / n;
  r.hr5 = hr5_ / n;
  r.hr20 = hr20_ / n;
  r.ndcg5 = ndcg5_ / n;
  r.ndcg20 = ndcg20_ / n;
  return r;
}

void save_report(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << report.to_key_value();
}

}  // namespace grec
