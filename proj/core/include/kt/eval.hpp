#pragma once

#include <string>
#include <vector>

#include "kt/models.hpp"
#include "kt/types.hpp"

namespace kt {

enum class Protocol { kOneByOne, kAllInOne };

std::string to_string(Protocol p);

struct PredRow {
  StudentId student;
  std::int32_t question_ordinal;
  QuestionId question;
  double prediction;
  int target;
};

struct EvalReport {
  Protocol protocol = Protocol::kOneByOne;
  std::vector<PredRow> rows;
  double auc = 0.0;
  int fold = -1;
  double wall_seconds = 0.0;
};

/// One forward over the expanded sequence, every KC step scored against its
/// target. Leak-prone for flag-free models; exists to expose exactly that.
EvalReport evaluate_one_by_one(Model& model, const InteractionLog& log);

/// Every KC of a question scored with history ending at the previous
/// question, then averaged into one prediction per question. For leak-free
/// models this is the same forward as one-by-one (their inputs never leak),
/// so per-step predictions agree bitwise between the protocols.
EvalReport evaluate_all_in_one(Model& model, const InteractionLog& log);

/// Per-step sigmoid probabilities, one vector per student. all_in_one
/// switches the history horizon for leak-prone models only.
std::vector<std::vector<double>> predict_steps(Model& model,
                                               const InteractionLog& log,
                                               Protocol protocol);

void write_report_csv(const EvalReport& report, const std::string& path);

}  // namespace kt
