#include "kt/batch.hpp"

#include <algorithm>

namespace kt {

int BatchInput::len(int row) const {
  int n = 0;
  while (n < max_len && valid[at(row, n)]) ++n;
  return n;
}

BatchInput make_batch(const std::vector<ExpandedSequence>& seqs) {
  BatchInput b;
  b.batch = static_cast<int>(seqs.size());
  for (const auto& s : seqs) b.max_len = std::max<int>(b.max_len, s.size());
  const std::size_t total = static_cast<std::size_t>(b.batch) * b.max_len;
  b.kc.assign(total, 0);
  b.question.assign(total, 0);
  b.input_label.assign(total, 0);
  b.recency.assign(total, 0);
  b.target.assign(total, 0);
  b.question_ordinal.assign(total, 0);
  b.block_id.assign(total, 0);
  b.block_start.assign(total, 0);
  b.is_last_kc.assign(total, 0);
  b.valid.assign(total, 0);

  for (int r = 0; r < b.batch; ++r) {
    const auto& s = seqs[r];
    int block_begin = 0;
    for (int t = 0; t < static_cast<int>(s.size()); ++t) {
      const auto i = b.at(r, t);
      if (t > 0 && s.question_ordinal[t] != s.question_ordinal[t - 1]) {
        block_begin = t;
      }
      b.kc[i] = s.kc[t];
      b.question[i] = s.question[t];
      b.input_label[i] = static_cast<std::int32_t>(s.input_label[t]);
      b.recency[i] = s.recency[t];
      b.target[i] = s.target[t];
      b.question_ordinal[i] = s.question_ordinal[t];
      b.block_id[i] = s.question_ordinal[t];
      b.block_start[i] = block_begin;
      b.is_last_kc[i] = s.is_last_kc_of_question[t];
      b.valid[i] = 1;
    }
  }
  return b;
}

BatchInput make_fused_batch(const std::vector<std::vector<FusedStep>>& groups) {
  BatchInput b;
  b.fused = true;
  b.batch = static_cast<int>(groups.size());
  for (const auto& g : groups) b.max_len = std::max<int>(b.max_len, g.size());
  const std::size_t total = static_cast<std::size_t>(b.batch) * b.max_len;
  b.question.assign(total, 0);
  b.input_label.assign(total, 0);
  b.target.assign(total, 0);
  b.question_ordinal.assign(total, 0);
  b.block_id.assign(total, 0);
  b.block_start.assign(total, 0);
  b.is_last_kc.assign(total, 1);
  b.valid.assign(total, 0);
  b.recency.assign(total, 0);
  b.kc.assign(total, 0);
  b.fused_offsets.assign(total + 1, 0);

  // Offsets are laid out row-major over the padded grid so each step's KC
  // list is addressable directly.
  std::int32_t cursor = 0;
  for (int r = 0; r < b.batch; ++r) {
    for (int t = 0; t < b.max_len; ++t) {
      const auto i = b.at(r, t);
      b.fused_offsets[i] = cursor;
      if (t < static_cast<int>(groups[r].size())) {
        const auto& step = groups[r][t];
        for (KcId c : step.kcs) {
          b.fused_kcs.push_back(c);
          ++cursor;
        }
        b.question[i] = step.question;
        b.input_label[i] = static_cast<std::int32_t>(step.target);
        b.target[i] = step.target;
        b.question_ordinal[i] = t;
        b.block_id[i] = t;
        b.block_start[i] = t;
        b.valid[i] = 1;
      }
    }
  }
  b.fused_offsets[total] = cursor;
  return b;
}

}  // namespace kt
