#include "oracles.hpp"

#include <algorithm>
#include <set>

namespace kt::oracle {

std::vector<ExpandedSequence> expand_bruteforce(const InteractionLog& log,
                                                MaskPolicy policy) {
  const auto recency = recency_bruteforce(log);
  std::vector<ExpandedSequence> out;
  for (std::size_t s = 0; s < log.students.size(); ++s) {
    ExpandedSequence ex;
    for (std::size_t i = 0; i < log.students[s].size(); ++i) {
      const auto [q, r] = log.students[s][i];
      std::vector<KcId> kcs = log.kc_map[q];
      std::sort(kcs.begin(), kcs.end());
      for (std::size_t k = 0; k < kcs.size(); ++k) {
        ex.question.push_back(q);
        ex.kc.push_back(kcs[k]);
        ex.target.push_back(r);
        ex.question_ordinal.push_back(static_cast<std::int32_t>(i));
        ex.is_last_kc_of_question.push_back(k + 1 == kcs.size() ? 1 : 0);
        InputLabel label = r == 1 ? InputLabel::kCorrect : InputLabel::kIncorrect;
        if (k + 1 != kcs.size()) {
          if (policy == MaskPolicy::kMaskLabel) label = InputLabel::kMask;
          if (policy == MaskPolicy::kAutoregressive) label = InputLabel::kAutoFill;
        }
        ex.input_label.push_back(label);
      }
    }
    ex.recency = recency[s];
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<std::vector<std::int32_t>> recency_bruteforce(const InteractionLog& log) {
  std::vector<std::vector<std::int32_t>> out(log.students.size());
  for (std::size_t s = 0; s < log.students.size(); ++s) {
    const auto& seq = log.students[s];
    for (std::size_t i = 0; i < seq.size(); ++i) {
      std::vector<KcId> kcs = log.kc_map[seq[i].question];
      std::sort(kcs.begin(), kcs.end());
      for (KcId c : kcs) {
        std::int32_t d = 0;
        for (int j = static_cast<int>(i) - 1; j >= 0; --j) {
          const auto& prior = log.kc_map[seq[j].question];
          if (std::find(prior.begin(), prior.end(), c) != prior.end()) {
            d = static_cast<std::int32_t>(i) - j;
            break;
          }
        }
        out[s].push_back(d);
      }
    }
  }
  return out;
}

double auc_paircount(const std::vector<double>& predictions,
                     const std::vector<int>& targets) {
  double wins = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (targets[i] == 0) continue;
    for (std::size_t j = 0; j < predictions.size(); ++j) {
      if (targets[j] != 0) continue;
      ++pairs;
      if (predictions[i] > predictions[j]) {
        wins += 1.0;
      } else if (predictions[i] == predictions[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / static_cast<double>(pairs);
}

InteractionLog random_log(std::mt19937_64& rng, int max_students, int max_questions,
                          int max_kcs_per_question, int max_len, int max_kcs) {
  auto pick = [&rng](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  InteractionLog log;
  log.n_questions = pick(1, max_questions);
  log.n_kcs = max_kcs > 0 ? pick(std::min(max_kcs_per_question, max_kcs), max_kcs)
                          : pick(max_kcs_per_question, 2 * max_kcs_per_question + 4);
  log.kc_map.resize(log.n_questions);
  for (auto& kcs : log.kc_map) {
    const int want = pick(1, std::min(max_kcs_per_question, log.n_kcs));
    std::set<KcId> chosen;
    while (static_cast<int>(chosen.size()) < want) {
      chosen.insert(pick(0, log.n_kcs - 1));
    }
    kcs.assign(chosen.begin(), chosen.end());
  }
  const int n_students = pick(1, max_students);
  log.students.resize(n_students);
  for (auto& seq : log.students) {
    const int len = pick(1, max_len);
    for (int t = 0; t < len; ++t) {
      seq.push_back({pick(0, log.n_questions - 1),
                     static_cast<Response>(pick(0, 1))});
    }
  }
  return log;
}

}  // namespace kt::oracle
