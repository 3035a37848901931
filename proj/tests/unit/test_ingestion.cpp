#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "kt/dataset_io.hpp"
#include "kt/errors.hpp"
#include "kt/expand.hpp"
#include "kt/ingest.hpp"
#include "support/oracles.hpp"

using namespace kt;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("ktkit_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string write_file(const TempDir& dir, const std::string& name,
                       const std::string& content) {
  const std::string p = dir.file(name);
  std::ofstream out(p);
  out << content;
  return p;
}

CsvSchema test_schema() {
  CsvSchema s;
  s.student_col = "user";
  s.question_col = "item";
  s.kc_col = "skills";
  s.correct_col = "correct";
  s.order_col = "order";
  s.kc_delimiter = "_";
  return s;
}

}  // namespace

TEST_CASE("parse_csv: delimiter splits KC annotations") {
  TempDir dir;
  const auto path = write_file(dir, "raw.csv",
                               "user,item,skills,correct,order\n"
                               "s1,A,add_sub,1,1\n"
                               "s1,A,add_sub,0,2\n");
  const auto log = parse_csv(path, test_schema());
  CHECK(log.n_questions == 1);
  CHECK(log.n_kcs == 2);  // "add" and "sub"
  CHECK(log.students.size() == 1);
  CHECK(log.students[0].size() == 2);

  // Same file, delimiter that never fires: one KC.
  auto schema = test_schema();
  schema.kc_delimiter = ";";
  const auto log2 = parse_csv(path, schema);
  CHECK(log2.n_kcs == 1);
}

TEST_CASE("parse_csv: non-binary response aborts with row number") {
  TempDir dir;
  const auto path = write_file(dir, "raw.csv",
                               "user,item,skills,correct,order\n"
                               "s1,A,add,1,1\n"
                               "s1,B,sub,2,2\n");
  CHECK_THROWS_WITH_AS(parse_csv(path, test_schema()),
                       doctest::Contains("NonBinaryResponse"), DataError);
  try {
    parse_csv(path, test_schema());
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
}

TEST_CASE("parse_csv: missing column reported") {
  TempDir dir;
  const auto path = write_file(dir, "raw.csv",
                               "user,item,correct,order\n"
                               "s1,A,1,1\n");
  CHECK_THROWS_WITH_AS(parse_csv(path, test_schema()),
                       doctest::Contains("MissingColumn"), DataError);
}

TEST_CASE("parse_csv: six-row fixture matches hand-counted stats") {
  // 3 questions, 2 students; KC lists: A={add}, B={add,sub}, C={mul}.
  // Hand count: 3 questions, 3 KCs, 2 students, 3 distinct groups,
  // mean = (1+2+1)/3 = 4/3.
  TempDir dir;
  const auto path = write_file(dir, "raw.csv",
                               "user,item,skills,correct,order\n"
                               "s1,A,add,1,1\n"
                               "s1,B,add_sub,0,2\n"
                               "s1,C,mul,1,3\n"
                               "s2,B,add_sub,1,1\n"
                               "s2,A,add,0,2\n"
                               "s2,C,mul,1,3\n");
  const auto log = parse_csv(path, test_schema());
  const auto st = dataset_stats(log);
  CHECK(st.n_questions == 3);
  CHECK(st.n_kcs == 3);
  CHECK(st.n_students == 2);
  CHECK(st.n_kc_groups == 3);
  CHECK(st.mean_kcs_per_question == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("parse_csv: rows sorted by order key, stable on ties") {
  TempDir dir;
  const auto path = write_file(dir, "raw.csv",
                               "user,item,skills,correct,order\n"
                               "s1,B,sub,0,5\n"
                               "s1,A,add,1,2\n");
  const auto log = parse_csv(path, test_schema());
  // Question "B" got dense id 0 (first appearance) but sits second in time.
  CHECK(log.students[0][0].question == 1);
  CHECK(log.students[0][1].question == 0);
}

TEST_CASE("split_students: counts, partition, determinism") {
  std::mt19937_64 rng(3);
  InteractionLog log = oracle::random_log(rng, 1, 10, 2, 5);
  log.students.resize(10);
  for (auto& s : log.students) {
    if (s.empty()) s.push_back({0, 1});
  }

  SplitPlan plan;
  plan.test_fraction = 0.2;
  plan.n_folds = 5;
  plan.seed = 42;
  const auto split = split_students(log, plan);

  CHECK(split.test_ids.size() == 2);
  CHECK(split.folds.size() == 5);
  std::set<StudentId> test_set(split.test_ids.begin(), split.test_ids.end());
  for (const auto& fold : split.folds) {
    CHECK(fold.train_ids.size() + fold.val_ids.size() == 8);
    CHECK(fold.val_ids.size() >= 1);  // floor(8/5)
    CHECK(fold.val_ids.size() <= 2);  // ceil(8/5)
    std::set<StudentId> seen;
    for (auto id : fold.train_ids) seen.insert(id);
    for (auto id : fold.val_ids) {
      CHECK(seen.insert(id).second);  // train/val disjoint
    }
    CHECK(seen.size() == 8);
    for (auto id : test_set) CHECK(seen.count(id) == 0);
  }
  // Every non-test student is in exactly one fold's val set across folds.
  std::set<StudentId> all_val;
  for (const auto& fold : split.folds) {
    for (auto id : fold.val_ids) CHECK(all_val.insert(id).second);
  }
  CHECK(all_val.size() == 8);

  const auto again = split_students(log, plan);
  CHECK(again.test_ids == split.test_ids);
  for (int f = 0; f < 5; ++f) {
    CHECK(again.folds[f].train_ids == split.folds[f].train_ids);
    CHECK(again.folds[f].val_ids == split.folds[f].val_ids);
  }
}

TEST_CASE("split_students: degenerate plan keeps everyone in train+val") {
  std::mt19937_64 rng(4);
  auto log = oracle::random_log(rng, 6, 10, 2, 5);
  while (log.n_students() < 2) log.students.push_back({{0, 1}});
  SplitPlan plan;
  plan.test_fraction = 0.0;
  plan.n_folds = 1;
  const auto split = split_students(log, plan);
  CHECK(split.test_ids.empty());
  CHECK(split.folds.size() == 1);
  CHECK(split.folds[0].train_ids.size() + split.folds[0].val_ids.size() ==
        static_cast<std::size_t>(log.n_students()));
}

TEST_CASE("split_students: too few students") {
  InteractionLog log;
  log.n_questions = 1;
  log.n_kcs = 1;
  log.kc_map = {{0}};
  log.students = {{{0, 1}}, {{0, 0}}, {{0, 1}}};
  SplitPlan plan;  // 5 folds need >= 6 students
  CHECK_THROWS_WITH_AS(split_students(log, plan),
                       doctest::Contains("TooFewStudents"), DataError);
}

TEST_CASE("window_questions: boundary, chunking, truncation") {
  InteractionLog log;
  log.n_questions = 1;
  log.n_kcs = 1;
  log.kc_map = {{0}};
  log.students.resize(2);
  for (int t = 0; t < 150; ++t) log.students[0].push_back({0, 1});
  for (int t = 0; t < 310; ++t) log.students[1].push_back({0, 0});

  const auto chunked = window_questions(log, 150);
  REQUIRE(chunked.students.size() == 4);  // 150 | 150,150,10
  CHECK(chunked.students[0].size() == 150);
  CHECK(chunked.students[1].size() == 150);
  CHECK(chunked.students[2].size() == 150);
  CHECK(chunked.students[3].size() == 10);

  std::size_t total = 0;
  for (const auto& s : chunked.students) total += s.size();
  CHECK(total == 150 + 310);

  const auto truncated = window_questions(log, 150, /*truncate_last=*/true);
  REQUIRE(truncated.students.size() == 2);
  CHECK(truncated.students[1].size() == 150);
}

TEST_CASE("window_questions before expansion never cuts a KC block") {
  // Two KCs per question: a full 150-question window expands to 300 steps.
  InteractionLog log;
  log.n_questions = 1;
  log.n_kcs = 2;
  log.kc_map = {{0, 1}};
  log.students.resize(1);
  for (int t = 0; t < 310; ++t) log.students[0].push_back({0, 1});

  const auto windowed = window_questions(log, 150);
  const auto expanded = expand(windowed, MaskPolicy::kNone);
  REQUIRE(expanded.size() == 3);
  CHECK(expanded[0].size() == 300);
  CHECK(expanded[1].size() == 300);
  CHECK(expanded[2].size() == 20);
  for (const auto& ex : expanded) {
    // Block integrity: every question contributes exactly its KC count.
    for (std::size_t i = 0; i + 1 < ex.size(); i += 2) {
      CHECK(ex.question_ordinal[i] == ex.question_ordinal[i + 1]);
    }
  }
}

TEST_CASE("dataset round-trip reproduces files bit-for-bit") {
  std::mt19937_64 rng(9);
  const auto log = oracle::random_log(rng, 8, 25, 3, 30);

  TempDir dir;
  save_dataset(log, dir.file("d1"));
  const auto loaded = load_dataset(dir.file("d1"));
  CHECK(loaded.n_questions == log.n_questions);
  CHECK(loaded.n_kcs == log.n_kcs);
  CHECK(loaded.kc_map == log.kc_map);
  CHECK(loaded.students == log.students);
  CHECK(dataset_stats(loaded) == dataset_stats(log));

  save_dataset(loaded, dir.file("d2"));
  for (const char* name : {"meta.json", "kcmap.csv", "interactions.csv"}) {
    std::ifstream a(dir.file("d1") + "/" + name, std::ios::binary);
    std::ifstream b(dir.file("d2") + "/" + name, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(a)), {});
    const std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
  }
  CHECK(dataset_fingerprint(dir.file("d1")) == dataset_fingerprint(dir.file("d2")));
}
