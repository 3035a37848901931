#include "kt/expand.hpp"

#include "kt/errors.hpp"

namespace kt {

std::vector<ExpandedSequence> expand(const InteractionLog& log, MaskPolicy policy) {
  if (policy == MaskPolicy::kFuseOnly) {
    throw ConfigError("kFuseOnly does not expand; use fuse_groups");
  }
  const auto distances = recency_distances(log);

  std::vector<ExpandedSequence> out(log.students.size());
  for (std::size_t s = 0; s < log.students.size(); ++s) {
    const auto& seq = log.students[s];
    ExpandedSequence& ex = out[s];
    std::size_t total = 0;
    for (const auto& it : seq) total += log.kc_map[it.question].size();
    ex.question.reserve(total);
    ex.kc.reserve(total);
    ex.input_label.reserve(total);
    ex.target.reserve(total);
    ex.question_ordinal.reserve(total);
    ex.is_last_kc_of_question.reserve(total);

    for (std::size_t i = 0; i < seq.size(); ++i) {
      const auto& kcs = log.kc_map[seq[i].question];  // ascending by invariant
      for (std::size_t k = 0; k < kcs.size(); ++k) {
        const bool last = k + 1 == kcs.size();
        ex.question.push_back(seq[i].question);
        ex.kc.push_back(kcs[k]);
        ex.target.push_back(seq[i].correct);
        ex.question_ordinal.push_back(static_cast<std::int32_t>(i));
        ex.is_last_kc_of_question.push_back(last ? 1 : 0);

        InputLabel label = static_cast<InputLabel>(seq[i].correct);
        if (!last) {
          if (policy == MaskPolicy::kMaskLabel) label = InputLabel::kMask;
          if (policy == MaskPolicy::kAutoregressive) label = InputLabel::kAutoFill;
        }
        ex.input_label.push_back(label);
      }
    }
    ex.recency = distances[s];
  }
  return out;
}

std::vector<std::vector<std::int32_t>> recency_distances(const InteractionLog& log) {
  std::vector<std::vector<std::int32_t>> out(log.students.size());
  std::vector<std::int32_t> last_seen;  // per KC, question ordinal; -1 = never
  for (std::size_t s = 0; s < log.students.size(); ++s) {
    const auto& seq = log.students[s];
    last_seen.assign(log.n_kcs, -1);
    auto& dist = out[s];
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const auto& kcs = log.kc_map[seq[i].question];
      for (KcId c : kcs) {
        const std::int32_t j = last_seen[c];
        dist.push_back(j < 0 ? 0 : static_cast<std::int32_t>(i) - j);
      }
      // Update after the block: KCs of one question never see each other.
      for (KcId c : kcs) last_seen[c] = static_cast<std::int32_t>(i);
    }
  }
  return out;
}

std::vector<std::vector<FusedStep>> fuse_groups(const InteractionLog& log) {
  std::vector<std::vector<FusedStep>> out(log.students.size());
  for (std::size_t s = 0; s < log.students.size(); ++s) {
    const auto& seq = log.students[s];
    out[s].reserve(seq.size());
    for (const auto& it : seq) {
      out[s].push_back({it.question, log.kc_map[it.question], it.correct});
    }
  }
  return out;
}

}  // namespace kt
