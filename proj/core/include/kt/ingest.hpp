#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kt/types.hpp"

namespace kt {

/// Names the five raw-CSV columns and the KC delimiter.
/// Loaded from a schema JSON file by the CLI (see schema_from_json).
struct CsvSchema {
  std::string student_col = "user_id";
  std::string question_col = "problem_id";
  std::string kc_col = "skill_name";
  std::string correct_col = "correct";
  std::string order_col = "order_id";  // empty -> file row order
  std::string kc_delimiter = "_";
  bool has_header = true;
};

CsvSchema schema_from_json(const std::string& json_text);
std::string schema_to_json(const CsvSchema& schema);

/// Parse a raw interaction CSV into a prepared log. Dense ids are assigned in
/// first-appearance order; per-student sequences are sorted by the order
/// column (stable, so ties keep file order). Throws DataError with the
/// offending row number on MissingColumn / EmptyKcList / NonBinaryResponse.
InteractionLog parse_csv(const std::string& path, const CsvSchema& schema);

struct SplitPlan {
  double test_fraction = 0.2;
  int n_folds = 5;
  std::uint64_t seed = 0;
};

struct StudentSplit {
  struct Fold {
    std::vector<StudentId> train_ids;
    std::vector<StudentId> val_ids;
  };
  std::vector<Fold> folds;
  std::vector<StudentId> test_ids;
};

/// Split by student, never by interaction. Deterministic under plan.seed.
/// Folds partition the non-test students exactly. Throws DataError
/// (TooFewStudents) when there are fewer than n_folds + 1 students.
StudentSplit split_students(const InteractionLog& log, const SplitPlan& plan);

/// Restrict sequences to at most `max_questions` questions. By default a
/// longer sequence is cut into consecutive non-overlapping windows, each
/// becoming a new pseudo-student; with truncate_last=true only the final
/// window is kept. Windowing happens before KC expansion.
InteractionLog window_questions(const InteractionLog& log,
                                int max_questions = 150,
                                bool truncate_last = false);

/// The sub-log containing exactly the given students (re-indexed densely in
/// the given order). Question/KC vocabularies are preserved.
InteractionLog subset_students(const InteractionLog& log,
                               const std::vector<StudentId>& ids);

}  // namespace kt
