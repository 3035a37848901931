#include <doctest.h>

#include <random>

#include "kt/errors.hpp"
#include "kt/expand.hpp"
#include "support/oracles.hpp"

using namespace kt;

namespace {

InteractionLog fixture_log() {
  // Three questions with KC lists {2}, {0,1}, {1}; one student answers all.
  InteractionLog log;
  log.n_questions = 3;
  log.n_kcs = 3;
  log.kc_map = {{2}, {0, 1}, {1}};
  log.students = {{{0, 1}, {1, 0}, {2, 1}}};
  return log;
}

}  // namespace

TEST_CASE("expand: mask label keeps only the final KC's ground truth") {
  // Question with KCs (c1,c2,c3): expansion (q,c1,MASK),(q,c2,MASK),(q,c3,r)
  InteractionLog log;
  log.n_questions = 1;
  log.n_kcs = 3;
  log.kc_map = {{0, 1, 2}};
  log.students = {{{0, 1}}};

  const auto ex = expand(log, MaskPolicy::kMaskLabel).at(0);
  REQUIRE(ex.size() == 3);
  CHECK(ex.input_label[0] == InputLabel::kMask);
  CHECK(ex.input_label[1] == InputLabel::kMask);
  CHECK(ex.input_label[2] == InputLabel::kCorrect);
  for (int i = 0; i < 3; ++i) CHECK(ex.target[i] == 1);
  CHECK(ex.is_last_kc_of_question[2] == 1);
  CHECK(ex.is_last_kc_of_question[0] == 0);
}

TEST_CASE("expand: single-KC question is identical under mask and none") {
  InteractionLog log;
  log.n_questions = 1;
  log.n_kcs = 1;
  log.kc_map = {{0}};
  log.students = {{{0, 0}}};
  const auto masked = expand(log, MaskPolicy::kMaskLabel).at(0);
  const auto plain = expand(log, MaskPolicy::kNone).at(0);
  CHECK(masked.input_label == plain.input_label);
  CHECK(masked.input_label[0] == InputLabel::kIncorrect);
}

TEST_CASE("expand: fixture KC order and mask placement") {
  const auto ex = expand(fixture_log(), MaskPolicy::kMaskLabel).at(0);
  REQUIRE(ex.size() == 4);
  CHECK(ex.kc == std::vector<KcId>{2, 0, 1, 1});
  CHECK(ex.input_label[0] == InputLabel::kCorrect);   // {2} single KC
  CHECK(ex.input_label[1] == InputLabel::kMask);      // first KC of {0,1}
  CHECK(ex.input_label[2] == InputLabel::kIncorrect); // final KC of {0,1}
  CHECK(ex.input_label[3] == InputLabel::kCorrect);   // {1} single KC
  CHECK(ex.question_ordinal == std::vector<std::int32_t>{0, 1, 1, 2});
}

TEST_CASE("expand: autoregressive marks non-final steps as runtime-filled") {
  const auto ex = expand(fixture_log(), MaskPolicy::kAutoregressive).at(0);
  CHECK(ex.input_label[1] == InputLabel::kAutoFill);
  CHECK(ex.input_label[2] == InputLabel::kIncorrect);
}

TEST_CASE("recency: first occurrence is zero, gaps in question units") {
  // KC 0 in questions at ordinals 0 and 4.
  InteractionLog log;
  log.n_questions = 2;
  log.n_kcs = 2;
  log.kc_map = {{0}, {1}};
  log.students = {{{0, 1}, {1, 1}, {1, 0}, {1, 1}, {0, 0}}};
  const auto d = recency_distances(log).at(0);
  REQUIRE(d.size() == 5);
  CHECK(d[0] == 0);  // first ever
  CHECK(d[1] == 0);
  CHECK(d[2] == 1);
  CHECK(d[3] == 1);
  CHECK(d[4] == 4);  // ordinal 4 minus ordinal 0
}

TEST_CASE("recency: KCs of one question track their own last occurrence") {
  InteractionLog log;
  log.n_questions = 3;
  log.n_kcs = 2;
  log.kc_map = {{0}, {1}, {0, 1}};
  log.students = {{{0, 1}, {1, 1}, {2, 0}}};
  const auto d = recency_distances(log).at(0);
  // Question {0,1} at ordinal 2: KC 0 last at 0 (d=2), KC 1 last at 1 (d=1).
  CHECK(d[2] == 2);
  CHECK(d[3] == 1);
}

TEST_CASE("recency: consecutive repeat gives d = 1, distinct from first-ever") {
  InteractionLog log;
  log.n_questions = 1;
  log.n_kcs = 1;
  log.kc_map = {{0}};
  log.students = {{{0, 1}, {0, 1}}};
  const auto d = recency_distances(log).at(0);
  CHECK(d[0] == 0);
  CHECK(d[1] == 1);
}

TEST_CASE("expansion and recency match the brute-force oracle") {
  std::mt19937_64 rng(1234);
  for (int it = 0; it < 200; ++it) {
    const auto log = oracle::random_log(rng, 6, 25, 5, 40);
    for (auto policy : {MaskPolicy::kNone, MaskPolicy::kMaskLabel,
                        MaskPolicy::kAutoregressive}) {
      const auto got = expand(log, policy);
      const auto want = oracle::expand_bruteforce(log, policy);
      REQUIRE(got.size() == want.size());
      for (std::size_t s = 0; s < got.size(); ++s) {
        CHECK(got[s].kc == want[s].kc);
        CHECK(got[s].question == want[s].question);
        CHECK(got[s].input_label == want[s].input_label);
        CHECK(got[s].target == want[s].target);
        CHECK(got[s].recency == want[s].recency);
        CHECK(got[s].question_ordinal == want[s].question_ordinal);
        CHECK(got[s].is_last_kc_of_question == want[s].is_last_kc_of_question);
      }
    }
  }
}

TEST_CASE("expansion properties: mask counts, restricted history, length") {
  std::mt19937_64 rng(99);
  for (int it = 0; it < 50; ++it) {
    const auto log = oracle::random_log(rng, 5, 20, 5, 30);
    const auto expanded = expand(log, MaskPolicy::kMaskLabel);
    for (std::size_t s = 0; s < expanded.size(); ++s) {
      const auto& ex = expanded[s];
      std::size_t want_len = 0;
      for (const auto& it2 : log.students[s]) {
        want_len += log.kc_map[it2.question].size();
      }
      CHECK(ex.size() == want_len);

      // Per question block: MASK count = |m(q)| - 1, and no non-final step
      // carries the true response (the restricted-history property).
      std::size_t i = 0;
      while (i < ex.size()) {
        std::size_t j = i;
        while (j + 1 < ex.size() &&
               ex.question_ordinal[j + 1] == ex.question_ordinal[i]) {
          ++j;
        }
        int masks = 0;
        for (std::size_t k = i; k <= j; ++k) {
          if (ex.input_label[k] == InputLabel::kMask) ++masks;
          if (k < j) CHECK(ex.input_label[k] == InputLabel::kMask);
        }
        CHECK(masks == static_cast<int>(j - i));
        CHECK(ex.input_label[j] == static_cast<InputLabel>(ex.target[j]));
        i = j + 1;
      }
    }
  }
}

TEST_CASE("recency distances do not depend on the mask policy") {
  std::mt19937_64 rng(5);
  const auto log = oracle::random_log(rng, 5, 20, 4, 30);
  const auto a = expand(log, MaskPolicy::kNone);
  const auto b = expand(log, MaskPolicy::kMaskLabel);
  const auto c = expand(log, MaskPolicy::kAutoregressive);
  for (std::size_t s = 0; s < a.size(); ++s) {
    CHECK(a[s].recency == b[s].recency);
    CHECK(a[s].recency == c[s].recency);
  }
}

TEST_CASE("fuse_groups: one entry per question, fixture order") {
  const auto groups = fuse_groups(fixture_log()).at(0);
  REQUIRE(groups.size() == 3);
  CHECK(groups[0].kcs == std::vector<KcId>{2});
  CHECK(groups[1].kcs == std::vector<KcId>{0, 1});
  CHECK(groups[2].kcs == std::vector<KcId>{1});
  CHECK(groups[1].target == 0);

  std::mt19937_64 rng(6);
  const auto log = oracle::random_log(rng, 4, 15, 4, 25);
  const auto all = fuse_groups(log);
  for (std::size_t s = 0; s < all.size(); ++s) {
    CHECK(all[s].size() == log.students[s].size());
  }
}

TEST_CASE("expand rejects the fuse-only policy") {
  CHECK_THROWS_AS(expand(fixture_log(), MaskPolicy::kFuseOnly), ConfigError);
}
