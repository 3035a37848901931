#pragma once

#include <cstdint>

#include "kt/types.hpp"

namespace kt {

/// Stress transform: replace every KC c by the pair {c, c + n_kcs} (two
/// injective maps with disjoint ranges). Students, questions, responses and
/// order are untouched; the KC count doubles, the KC-group count and the
/// question-level stream stay identical.
InteractionLog duplicate_kcs(const InteractionLog& log);

/// Mastery process for the planted generator. A student's probability of
/// answering question q correctly at question-step t is
///
///   P = guess + (1 - guess - slip) * sigmoid(ability_s + skill(q, t))
///   skill(q, t) = mean over c in m(q) of gain_c * trace_c(t)
///   trace_c(t)  = sum over earlier steps j with c in m(q_j) of exp(-decay * (t - j))
///
/// so correctness rises with prior exposures of the question's KCs and falls
/// with the recency gap. On a question whose KCs have never occurred the
/// closed form reduces to guess + (1 - guess - slip) * sigmoid(ability_s).
struct PlantedModel {
  double guess = 0.15;
  double slip = 0.10;
  double decay = 0.10;         // recency decay rate (per question step)
  double gain_min = 0.8;       // per-KC mastery gain ~ U[gain_min, gain_max]
  double gain_max = 2.0;
  double ability_mean = 0.0;   // per-student ability ~ N(mean, sd^2)
  double ability_sd = 1.0;
  std::uint64_t seed = 0;
};

struct PlantedSpec {
  int n_students = 100;
  int n_questions = 200;  // question vocabulary size
  int n_kcs = 20;
  int kcs_per_question_min = 1;
  int kcs_per_question_max = 3;
  int steps_per_student = 100;  // questions answered, sampled with replacement
};

/// Deterministic under model.seed; generation is independent per student
/// (per-student derived seeds).
InteractionLog generate_planted(const PlantedSpec& spec, const PlantedModel& model);

/// The generator's own closed form, exposed for Monte-Carlo checks.
double planted_correct_probability(const PlantedModel& model, double ability,
                                   double mean_gained_trace);

}  // namespace kt
