#include "grec/masker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace grec {

std::size_t gap_count(std::size_t valid_len, double gamma) {
  if (valid_len < 2) {
    throw std::invalid_argument("gap sampling needs valid_len >= 2, got " +
                                std::to_string(valid_len));
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("gap fraction must lie in (0, 1]");
  }
  const double raw = std::round(gamma * static_cast<double>(valid_len - 1));
  return std::clamp<std::size_t>(static_cast<std::size_t>(raw), 1, valid_len - 1);
}

MaskPlan sample_gaps(std::span<const int> row, std::size_t valid_len,
                     double gamma, int mask_id, Rng& rng) {
  if (valid_len > row.size()) throw std::invalid_argument("valid_len exceeds row length");
  const std::size_t m = gap_count(valid_len, gamma);
  const std::size_t first_candidate = row.size() - valid_len + 1;

  std::vector<std::size_t> candidates(row.size() - first_candidate);
  std::iota(candidates.begin(), candidates.end(), first_candidate);
  // Partial Fisher-Yates: the first m slots become a uniform m-subset.
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
    std::swap(candidates[i], candidates[pick(rng)]);
  }
  candidates.resize(m);
  std::sort(candidates.begin(), candidates.end());

  MaskPlan plan;
  plan.gamma = gamma;
  plan.positions = std::move(candidates);
  for (auto pos : plan.positions) plan.targets.push_back(row[pos]);
  plan.gapped = apply_gaps(plan, row, mask_id);
  return plan;
}

std::vector<int> apply_gaps(const MaskPlan& plan, std::span<const int> row,
                            int mask_id) {
  std::vector<int> gapped(row.begin(), row.end());
  for (auto pos : plan.positions) gapped.at(pos) = mask_id;
  return gapped;
}

}  // namespace grec
