#pragma once

#include <cstdint>
#include <vector>

#include "kt/types.hpp"

namespace kt {

/// Input-label alphabet for expanded steps. Mask replaces the ground-truth
/// response on every non-final KC of a multi-KC question; AutoFill marks a
/// step whose label the model fills in from its own prediction at runtime
/// (autoregressive decoding). Targets are always binary.
enum class InputLabel : std::int8_t {
  kIncorrect = 0,
  kCorrect = 1,
  kMask = 2,
  kAutoFill = 3,
};

enum class MaskPolicy {
  kNone,            // input label = target everywhere (leak-prone)
  kMaskLabel,       // non-final KCs of a question carry Mask
  kAutoregressive,  // non-final KCs carry AutoFill sentinels
  kFuseOnly,        // no expansion; one step per question (see fuse_groups)
};

/// One student's KC-level sequence, stored as parallel arrays.
/// Invariants: steps of one question are contiguous and ordered by ascending
/// kc_id; target_label is constant across a question's block; length equals
/// the sum of |m(q)| over the student's questions.
struct ExpandedSequence {
  std::vector<QuestionId> question;
  std::vector<KcId> kc;
  std::vector<InputLabel> input_label;
  std::vector<Response> target;
  std::vector<std::int32_t> recency;           // question-index units
  std::vector<std::int32_t> question_ordinal;  // index within student seq
  std::vector<std::uint8_t> is_last_kc_of_question;

  std::size_t size() const { return kc.size(); }
};

/// KC-expand every student sequence under the given policy and attach
/// recency distances. Policy kFuseOnly is rejected here; use fuse_groups.
std::vector<ExpandedSequence> expand(const InteractionLog& log, MaskPolicy policy);

/// Recency distances alone, one vector per student aligned with the expanded
/// steps. For the step with KC c originating from the i-th question, the
/// distance is i - j where j is the most recent earlier question containing
/// c, or 0 when c has never occurred before. Distances are counted in
/// question-index units and do not depend on the mask policy.
std::vector<std::vector<std::int32_t>> recency_distances(const InteractionLog& log);

/// Per-question grouping for the averaged-embeddings (-Fuse) models: one
/// entry per question in original order, no expansion.
struct FusedStep {
  QuestionId question;
  std::vector<KcId> kcs;
  Response target;
};

std::vector<std::vector<FusedStep>> fuse_groups(const InteractionLog& log);

}  // namespace kt
