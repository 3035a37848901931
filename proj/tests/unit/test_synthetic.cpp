#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "kt/errors.hpp"
#include "kt/expand.hpp"
#include "kt/synthetic.hpp"
#include "support/oracles.hpp"

using namespace kt;

TEST_CASE("duplicate_kcs: single question, single KC") {
  InteractionLog log;
  log.n_questions = 1;
  log.n_kcs = 1;
  log.kc_map = {{0}};
  log.students = {{{0, 1}}};
  const auto dup = duplicate_kcs(log);
  CHECK(dup.n_kcs == 2);
  CHECK(dup.kc_map[0] == std::vector<KcId>{0, 1});
  CHECK(dup.students == log.students);
}

TEST_CASE("duplicate_kcs: stats identities on random logs") {
  std::mt19937_64 rng(21);
  for (int it = 0; it < 30; ++it) {
    const auto log = oracle::random_log(rng, 6, 30, 4, 25);
    const auto dup = duplicate_kcs(log);
    dup.validate();
    const auto before = dataset_stats(log);
    const auto after = dataset_stats(dup);
    CHECK(after.n_questions == before.n_questions);
    CHECK(after.n_students == before.n_students);
    CHECK(after.n_kcs == 2 * before.n_kcs);
    CHECK(after.n_kc_groups == before.n_kc_groups);
    CHECK(after.mean_kcs_per_question ==
          doctest::Approx(2.0 * before.mean_kcs_per_question).epsilon(1e-12));
    // The (student, question, response) stream is untouched.
    CHECK(dup.students == log.students);
  }
}

TEST_CASE("duplicate_kcs: recency of both duplicates equals the original") {
  std::mt19937_64 rng(22);
  const auto log = oracle::random_log(rng, 5, 20, 3, 30);
  const auto dup = duplicate_kcs(log);
  const auto orig_d = recency_distances(log);
  const auto dup_d = recency_distances(dup);
  for (std::size_t s = 0; s < log.students.size(); ++s) {
    // Each original step (i, c) appears twice after duplication, as c and as
    // c + |C|; both must carry the original distance.
    const auto orig_ex = expand(log, MaskPolicy::kNone)[s];
    const auto dup_ex = expand(dup, MaskPolicy::kNone)[s];
    for (std::size_t i = 0; i < dup_ex.size(); ++i) {
      const KcId base_kc = dup_ex.kc[i] % log.n_kcs;
      bool matched = false;
      for (std::size_t j = 0; j < orig_ex.size(); ++j) {
        if (orig_ex.question_ordinal[j] == dup_ex.question_ordinal[i] &&
            orig_ex.kc[j] == base_kc) {
          CHECK(dup_d[s][i] == orig_d[s][j]);
          matched = true;
          break;
        }
      }
      CHECK(matched);
    }
  }
}

TEST_CASE("generate_planted: deterministic under seed") {
  PlantedSpec spec;
  spec.n_students = 20;
  spec.n_questions = 40;
  spec.n_kcs = 8;
  spec.kcs_per_question_max = 3;
  spec.steps_per_student = 30;
  PlantedModel model;
  model.seed = 77;
  const auto a = generate_planted(spec, model);
  const auto b = generate_planted(spec, model);
  CHECK(a.kc_map == b.kc_map);
  CHECK(a.students == b.students);

  model.seed = 78;
  const auto c = generate_planted(spec, model);
  CHECK(a.students != c.students);
}

TEST_CASE("generate_planted: instant mastery makes fully-seen repeats correct") {
  PlantedSpec spec;
  spec.n_students = 30;
  spec.n_questions = 15;
  spec.n_kcs = 5;
  spec.kcs_per_question_max = 2;
  spec.steps_per_student = 60;
  PlantedModel model;
  model.guess = 0.0;
  model.slip = 0.0;
  model.decay = 0.0;       // no forgetting
  model.gain_min = 1000.0; // saturates the logistic after one exposure
  model.gain_max = 1000.0;
  model.seed = 5;
  const auto log = generate_planted(spec, model);

  for (const auto& seq : log.students) {
    std::set<KcId> seen;
    for (const auto& it : seq) {
      bool all_seen = true;
      for (KcId c : log.kc_map[it.question]) all_seen = all_seen && seen.count(c);
      if (all_seen) CHECK(it.correct == 1);
      for (KcId c : log.kc_map[it.question]) seen.insert(c);
    }
  }
}

TEST_CASE("generate_planted: first-exposure rate matches the closed form") {
  PlantedSpec spec;
  spec.n_students = 1200;
  spec.n_questions = 300;
  spec.n_kcs = 40;
  spec.kcs_per_question_min = 1;
  spec.kcs_per_question_max = 3;
  spec.steps_per_student = 100;  // 120k interactions total
  PlantedModel model;
  model.seed = 31;
  const auto log = generate_planted(spec, model);

  // Empirical P(correct) over steps whose KCs are all first-ever.
  long n = 0, correct = 0;
  for (const auto& seq : log.students) {
    std::set<KcId> seen;
    for (const auto& it : seq) {
      bool fresh = true;
      for (KcId c : log.kc_map[it.question]) fresh = fresh && !seen.count(c);
      if (fresh) {
        ++n;
        correct += it.correct;
      }
      for (KcId c : log.kc_map[it.question]) seen.insert(c);
    }
  }
  REQUIRE(n > 10000);
  const double empirical = static_cast<double>(correct) / n;

  // Closed form averaged over the ability distribution by quadrature.
  double expected = 0.0, mass = 0.0;
  const int grid = 4001;
  for (int i = 0; i < grid; ++i) {
    const double x = -8.0 + 16.0 * i / (grid - 1);
    const double w = std::exp(-0.5 * x * x);
    expected += w * planted_correct_probability(
                        model, model.ability_mean + model.ability_sd * x, 0.0);
    mass += w;
  }
  expected /= mass;
  CHECK(std::abs(empirical - expected) < 0.02);
}

TEST_CASE("generate_planted: invalid ranges rejected") {
  PlantedSpec spec;
  spec.n_kcs = 2;
  spec.kcs_per_question_max = 5;
  CHECK_THROWS_WITH_AS(generate_planted(spec, PlantedModel{}),
                       doctest::Contains("InvalidRange"), DataError);
  PlantedSpec ok;
  PlantedModel bad;
  bad.guess = 0.8;
  bad.slip = 0.5;
  CHECK_THROWS_WITH_AS(generate_planted(ok, bad),
                       doctest::Contains("InvalidRange"), DataError);
}
