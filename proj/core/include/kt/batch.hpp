#pragma once

#include <cstdint>
#include <vector>

#include "kt/expand.hpp"

namespace kt {

/// Padded batch of expanded (or fused) sequences, batch x max_len row-major.
/// Padding positions have valid = 0 and are excluded from losses and metrics.
/// block_id marks same-question membership; block_start is the expanded index
/// of the block's first step (the history horizon used by the all-in-one
/// protocol for leak-prone models).
struct BatchInput {
  int batch = 0;
  int max_len = 0;
  bool fused = false;

  std::vector<std::int32_t> kc;            // unused when fused
  std::vector<std::int32_t> question;
  std::vector<std::int32_t> input_label;   // InputLabel as int
  std::vector<std::int32_t> recency;
  std::vector<std::int32_t> target;
  std::vector<std::int32_t> question_ordinal;
  std::vector<std::int32_t> block_id;
  std::vector<std::int32_t> block_start;
  std::vector<std::uint8_t> is_last_kc;
  std::vector<std::uint8_t> valid;

  // Fused layout: KC id list per step.
  std::vector<std::int32_t> fused_kcs;      // flat
  std::vector<std::int32_t> fused_offsets;  // batch*max_len + 1 entries

  std::size_t at(int row, int step) const {
    return static_cast<std::size_t>(row) * max_len + step;
  }
  /// Number of valid steps in a row (valid steps form a prefix).
  int len(int row) const;
};

BatchInput make_batch(const std::vector<ExpandedSequence>& seqs);
BatchInput make_fused_batch(const std::vector<std::vector<FusedStep>>& groups);

}  // namespace kt
