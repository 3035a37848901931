#include "kt/types.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "kt/errors.hpp"

namespace kt {

void InteractionLog::validate() const {
  if (static_cast<std::int32_t>(kc_map.size()) != n_questions) {
    throw DataError("kc_map size " + std::to_string(kc_map.size()) +
                    " does not match n_questions " + std::to_string(n_questions));
  }
  for (QuestionId q = 0; q < n_questions; ++q) {
    const auto& kcs = kc_map[q];
    if (kcs.empty()) {
      throw DataError("EmptyKcList: question " + std::to_string(q));
    }
    for (std::size_t i = 0; i < kcs.size(); ++i) {
      if (kcs[i] < 0 || kcs[i] >= n_kcs) {
        throw DataError("kc id out of range for question " + std::to_string(q));
      }
      if (i > 0 && kcs[i] <= kcs[i - 1]) {
        throw DataError("kc list not strictly ascending for question " +
                        std::to_string(q));
      }
    }
  }
  for (std::size_t s = 0; s < students.size(); ++s) {
    if (students[s].empty()) {
      throw DataError("student " + std::to_string(s) + " has an empty sequence");
    }
    for (const auto& it : students[s]) {
      if (it.question < 0 || it.question >= n_questions) {
        throw DataError("question id out of range in sequence of student " +
                        std::to_string(s));
      }
      if (it.correct > 1) {
        throw DataError("NonBinaryResponse in sequence of student " +
                        std::to_string(s));
      }
    }
  }
}

bool canonicalize_kc_list(std::vector<KcId>& kcs) {
  std::sort(kcs.begin(), kcs.end());
  auto last = std::unique(kcs.begin(), kcs.end());
  const bool had_duplicates = last != kcs.end();
  kcs.erase(last, kcs.end());
  return had_duplicates;
}

DatasetStats dataset_stats(const InteractionLog& log) {
  DatasetStats st;
  st.n_questions = log.n_questions;
  st.n_kcs = log.n_kcs;
  st.n_students = log.n_students();

  std::set<std::vector<KcId>> groups(log.kc_map.begin(), log.kc_map.end());
  st.n_kc_groups = static_cast<std::int64_t>(groups.size());

  std::int64_t total = 0;
  for (const auto& kcs : log.kc_map) {
    total += static_cast<std::int64_t>(kcs.size());
  }
  st.mean_kcs_per_question =
      log.n_questions == 0 ? 0.0
                           : static_cast<double>(total) / log.n_questions;
  return st;
}

}  // namespace kt
