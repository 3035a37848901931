#pragma once

#include <cstdint>
#include <vector>

namespace kt {

// Identifiers are dense, contiguous 0..N-1 within a prepared dataset and
// stable across a run.
using QuestionId = std::int32_t;
using KcId = std::int32_t;
using StudentId = std::int32_t;

/// Binary response: 0 = incorrect, 1 = correct. The MASK symbol is an
/// input-label state only (see expand.hpp); it never appears as a target.
using Response = std::uint8_t;

/// Per-question ordered list of KC ids (the question -> KC-set mapping).
/// Lists are canonicalized at construction: sorted ascending, deduplicated,
/// non-empty.
using KcMap = std::vector<std::vector<KcId>>;

struct Interaction {
  QuestionId question = 0;
  Response correct = 0;

  bool operator==(const Interaction&) const = default;
};

/// One student's chronological question/response sequence.
using StudentSequence = std::vector<Interaction>;

/// A prepared dataset: per-student chronological sequences plus the shared
/// question -> KC map. Immutable after construction; safe to share read-only
/// across threads.
struct InteractionLog {
  std::int32_t n_questions = 0;
  std::int32_t n_kcs = 0;
  KcMap kc_map;                          // indexed by QuestionId
  std::vector<StudentSequence> students; // indexed by StudentId

  std::int32_t n_students() const {
    return static_cast<std::int32_t>(students.size());
  }

  /// Throws DataError if any invariant is broken (empty sequence, question
  /// outside the KC map, unsorted/duplicate/empty KC list).
  void validate() const;
};

struct DatasetStats {
  std::int64_t n_questions = 0;
  std::int64_t n_kcs = 0;
  std::int64_t n_students = 0;
  std::int64_t n_kc_groups = 0;        // distinct sorted KC lists over questions
  double mean_kcs_per_question = 0.0;  // (sum_q |m(q)|) / |Q|

  bool operator==(const DatasetStats&) const = default;
};

/// Counts are computed over the question vocabulary, not over interactions.
DatasetStats dataset_stats(const InteractionLog& log);

/// Canonicalize a raw KC list: sort ascending, drop duplicates.
/// Returns true if duplicates were removed (caller may warn).
bool canonicalize_kc_list(std::vector<KcId>& kcs);

}  // namespace kt
