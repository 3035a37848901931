#include "kt/synthetic.hpp"

#include <cmath>
#include <random>

#include "kt/errors.hpp"
#include "kt/rng.hpp"

namespace kt {

InteractionLog duplicate_kcs(const InteractionLog& log) {
  InteractionLog out;
  out.n_questions = log.n_questions;
  out.n_kcs = log.n_kcs * 2;
  out.students = log.students;
  out.kc_map.reserve(log.kc_map.size());
  for (const auto& kcs : log.kc_map) {
    std::vector<KcId> dup;
    dup.reserve(kcs.size() * 2);
    // m'(c) = c, m''(c) = c + |C|; already ascending when built this way.
    for (KcId c : kcs) dup.push_back(c);
    for (KcId c : kcs) dup.push_back(c + log.n_kcs);
    out.kc_map.push_back(std::move(dup));
  }
  return out;
}

double planted_correct_probability(const PlantedModel& model, double ability,
                                   double mean_gained_trace) {
  const double z = ability + mean_gained_trace;
  const double sig = 1.0 / (1.0 + std::exp(-z));
  return model.guess + (1.0 - model.guess - model.slip) * sig;
}

InteractionLog generate_planted(const PlantedSpec& spec, const PlantedModel& model) {
  if (spec.kcs_per_question_min < 1 ||
      spec.kcs_per_question_max < spec.kcs_per_question_min ||
      spec.n_kcs < spec.kcs_per_question_max) {
    throw DataError("InvalidRange: kcs_per_question range must fit in [1, n_kcs]");
  }
  if (model.guess < 0 || model.slip < 0 || model.guess + model.slip > 1) {
    throw DataError("InvalidRange: guess/slip must be probabilities with guess+slip <= 1");
  }
  if (spec.n_students < 1 || spec.n_questions < 1 || spec.steps_per_student < 1) {
    throw DataError("InvalidRange: counts must be positive");
  }

  InteractionLog log;
  log.n_questions = spec.n_questions;
  log.n_kcs = spec.n_kcs;

  // Question -> KC assignment.
  {
    auto rng = make_engine(substream(model.seed, "planted-kcmap"));
    std::uniform_int_distribution<int> n_kc_dist(spec.kcs_per_question_min,
                                                 spec.kcs_per_question_max);
    std::uniform_int_distribution<int> kc_dist(0, spec.n_kcs - 1);
    log.kc_map.resize(spec.n_questions);
    for (auto& kcs : log.kc_map) {
      const int want = n_kc_dist(rng);
      while (static_cast<int>(kcs.size()) < want) {
        const KcId c = kc_dist(rng);
        bool seen = false;
        for (KcId existing : kcs) seen = seen || existing == c;
        if (!seen) kcs.push_back(c);
      }
      canonicalize_kc_list(kcs);
    }
  }

  // Per-KC mastery gains.
  std::vector<double> gain(spec.n_kcs);
  {
    auto rng = make_engine(substream(model.seed, "planted-gains"));
    std::uniform_real_distribution<double> gain_dist(model.gain_min, model.gain_max);
    for (auto& g : gain) g = gain_dist(rng);
  }

  log.students.resize(spec.n_students);
  for (int s = 0; s < spec.n_students; ++s) {
    auto rng = make_engine(substream(model.seed, "planted-student", s));
    std::normal_distribution<double> ability_dist(model.ability_mean, model.ability_sd);
    std::uniform_int_distribution<int> q_dist(0, spec.n_questions - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const double ability = ability_dist(rng);
    std::vector<std::int32_t> last_seen(spec.n_kcs, -1);
    std::vector<double> trace(spec.n_kcs, 0.0);  // decayed exposure count

    auto& seq = log.students[s];
    seq.reserve(spec.steps_per_student);
    for (int t = 0; t < spec.steps_per_student; ++t) {
      const QuestionId q = q_dist(rng);
      const auto& kcs = log.kc_map[q];

      double skill = 0.0;
      for (KcId c : kcs) {
        const double decayed =
            last_seen[c] < 0
                ? 0.0
                : trace[c] * std::exp(-model.decay * (t - last_seen[c]));
        skill += gain[c] * decayed;
      }
      skill /= static_cast<double>(kcs.size());

      const double p = planted_correct_probability(model, ability, skill);
      const Response r = unit(rng) < p ? 1 : 0;
      seq.push_back({q, r});

      // One exposure added per practiced KC, after the response.
      for (KcId c : kcs) {
        const double decayed =
            last_seen[c] < 0
                ? 0.0
                : trace[c] * std::exp(-model.decay * (t - last_seen[c]));
        trace[c] = decayed + 1.0;
        last_seen[c] = t;
      }
    }
  }

  log.validate();
  return log;
}

}  // namespace kt
