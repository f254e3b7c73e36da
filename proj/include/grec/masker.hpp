#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "grec/random.hpp"

namespace grec {

/// The gaps chosen for one session row.
///
/// `positions` are 0-based column indices into the (left-padded) row, sorted
/// ascending. They never include PAD columns or the first valid column.
struct MaskPlan {
  std::vector<std::size_t> positions;
  std::vector<int> targets;  // original ids at `positions`
  std::vector<int> gapped;   // row with `positions` replaced by MASK
  double gamma = 0.0;

  std::size_t count() const { return positions.size(); }
};

// m = clamp(round(gamma * (valid_len - 1)), 1, valid_len - 1).
std::size_t gap_count(std::size_t valid_len, double gamma);

// Draws a fresh gap set uniformly without replacement from the valid
// columns after the first one.
MaskPlan sample_gaps(std::span<const int> row, std::size_t valid_len,
                     double gamma, int mask_id, Rng& rng);

std::vector<int> apply_gaps(const MaskPlan& plan, std::span<const int> row,
                            int mask_id);

}  // namespace grec
