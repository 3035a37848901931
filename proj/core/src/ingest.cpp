#include "kt/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "kt/errors.hpp"
#include "kt/rng.hpp"

namespace kt {
namespace {

// Minimal RFC-4180-ish splitter: handles quoted fields and doubled quotes,
// no embedded newlines.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::vector<std::string> split_on(const std::string& s, const std::string& delim) {
  std::vector<std::string> parts;
  if (delim.empty()) {
    parts.push_back(s);
    return parts;
  }
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = s.find(delim, pos);
    if (next == std::string::npos) {
      parts.push_back(s.substr(pos));
      break;
    }
    parts.push_back(s.substr(pos, next - pos));
    pos = next + delim.size();
  }
  return parts;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  std::size_t e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

}  // namespace

CsvSchema schema_from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  CsvSchema s;
  s.student_col = j.at("student_col").get<std::string>();
  s.question_col = j.at("question_col").get<std::string>();
  s.kc_col = j.at("kc_col").get<std::string>();
  s.correct_col = j.at("correct_col").get<std::string>();
  s.order_col = j.value("order_col", std::string{});
  s.kc_delimiter = j.value("kc_delimiter", std::string{"_"});
  s.has_header = j.value("has_header", true);
  return s;
}

std::string schema_to_json(const CsvSchema& s) {
  nlohmann::json j;
  j["student_col"] = s.student_col;
  j["question_col"] = s.question_col;
  j["kc_col"] = s.kc_col;
  j["correct_col"] = s.correct_col;
  j["order_col"] = s.order_col;
  j["kc_delimiter"] = s.kc_delimiter;
  j["has_header"] = s.has_header;
  return j.dump(2);
}

InteractionLog parse_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open " + path);
  }

  std::string line;
  long row_no = 0;

  // Column positions. Without a header the schema columns are interpreted as
  // 0-based indices.
  int c_student = -1, c_question = -1, c_kcs = -1, c_correct = -1, c_order = -1;
  if (schema.has_header) {
    if (!std::getline(in, line)) {
      throw DataError("empty file " + path);
    }
    ++row_no;
    const auto header = split_csv_line(line);
    auto find = [&](const std::string& name) -> int {
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (trim(header[i]) == name) return static_cast<int>(i);
      }
      return -1;
    };
    c_student = find(schema.student_col);
    c_question = find(schema.question_col);
    c_kcs = find(schema.kc_col);
    c_correct = find(schema.correct_col);
    c_order = schema.order_col.empty() ? -1 : find(schema.order_col);
    for (auto [idx, name] :
         {std::pair{c_student, schema.student_col},
          std::pair{c_question, schema.question_col},
          std::pair{c_kcs, schema.kc_col},
          std::pair{c_correct, schema.correct_col}}) {
      if (idx < 0) {
        throw DataError("MissingColumn: '" + name + "' in " + path);
      }
    }
    if (!schema.order_col.empty() && c_order < 0) {
      throw DataError("MissingColumn: '" + schema.order_col + "' in " + path);
    }
  } else {
    auto to_index = [&](const std::string& s, const char* what) {
      try {
        return std::stoi(s);
      } catch (...) {
        throw DataError(std::string("schema without header needs numeric "
                                    "column indices, got '") + s + "' for " + what);
      }
    };
    c_student = to_index(schema.student_col, "student_col");
    c_question = to_index(schema.question_col, "question_col");
    c_kcs = to_index(schema.kc_col, "kc_col");
    c_correct = to_index(schema.correct_col, "correct_col");
    c_order = schema.order_col.empty() ? -1 : to_index(schema.order_col, "order_col");
  }

  struct Row {
    StudentId student;
    QuestionId question;
    long order;
    Response correct;
    long file_row;
  };
  std::vector<Row> rows;

  std::unordered_map<std::string, StudentId> student_ids;
  std::unordered_map<std::string, QuestionId> question_ids;
  std::unordered_map<std::string, KcId> kc_ids;
  // Raw KC lists per question, keyed by dense question id. First annotation
  // wins; later rows for the same question are checked for consistency only
  // by id assignment (re-annotation with new KCs extends the list).
  std::vector<std::vector<KcId>> kc_lists;

  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    const int max_col = std::max({c_student, c_question, c_kcs, c_correct, c_order});
    if (static_cast<int>(fields.size()) <= max_col) {
      throw DataError("MissingColumn: row " + std::to_string(row_no) +
                      " has only " + std::to_string(fields.size()) + " fields");
    }

    const std::string student_key = trim(fields[c_student]);
    const std::string question_key = trim(fields[c_question]);
    const std::string kc_field = trim(fields[c_kcs]);
    const std::string correct_field = trim(fields[c_correct]);

    Response correct;
    if (correct_field == "0") {
      correct = 0;
    } else if (correct_field == "1") {
      correct = 1;
    } else {
      throw DataError("NonBinaryResponse: '" + correct_field + "' at row " +
                      std::to_string(row_no));
    }

    auto intern = [](auto& map, const std::string& key) {
      auto [it, inserted] = map.emplace(key, static_cast<std::int32_t>(map.size()));
      return it->second;
    };
    const StudentId sid = intern(student_ids, student_key);
    const QuestionId qid = intern(question_ids, question_key);

    if (static_cast<std::size_t>(qid) == kc_lists.size()) {
      std::vector<KcId> kcs;
      for (const auto& part : split_on(kc_field, schema.kc_delimiter)) {
        const std::string name = trim(part);
        if (name.empty()) continue;
        kcs.push_back(intern(kc_ids, name));
      }
      if (kcs.empty()) {
        throw DataError("EmptyKcList: at row " + std::to_string(row_no));
      }
      canonicalize_kc_list(kcs);
      kc_lists.push_back(std::move(kcs));
    }

    long order = row_no;
    if (c_order >= 0) {
      try {
        order = std::stol(trim(fields[c_order]));
      } catch (...) {
        throw DataError("bad order value at row " + std::to_string(row_no));
      }
    }
    rows.push_back({sid, qid, order, correct, row_no});
  }

  if (rows.empty()) {
    throw DataError("no interaction rows in " + path);
  }

  InteractionLog log;
  log.n_questions = static_cast<std::int32_t>(question_ids.size());
  log.n_kcs = static_cast<std::int32_t>(kc_ids.size());
  log.kc_map = std::move(kc_lists);
  log.students.resize(student_ids.size());

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.student != b.student) return a.student < b.student;
    return a.order < b.order;
  });
  for (const auto& r : rows) {
    log.students[r.student].push_back({r.question, r.correct});
  }

  log.validate();
  return log;
}

StudentSplit split_students(const InteractionLog& log, const SplitPlan& plan) {
  const int n = log.n_students();
  if (plan.n_folds < 1) {
    throw DataError("split plan needs at least one fold");
  }
  if (n < plan.n_folds + 1) {
    throw DataError("TooFewStudents: " + std::to_string(n) + " students for " +
                    std::to_string(plan.n_folds) + " folds");
  }

  std::vector<StudentId> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  auto rng = make_engine(substream(plan.seed, "split-students"));
  std::shuffle(ids.begin(), ids.end(), rng);

  const int n_test = static_cast<int>(plan.test_fraction * n + 0.5);
  StudentSplit split;
  split.test_ids.assign(ids.begin(), ids.begin() + n_test);
  std::sort(split.test_ids.begin(), split.test_ids.end());

  const std::vector<StudentId> rest(ids.begin() + n_test, ids.end());
  split.folds.resize(plan.n_folds);
  for (int f = 0; f < plan.n_folds; ++f) {
    for (std::size_t i = 0; i < rest.size(); ++i) {
      auto& fold = split.folds[f];
      if (static_cast<int>(i % plan.n_folds) == f) {
        fold.val_ids.push_back(rest[i]);
      } else {
        fold.train_ids.push_back(rest[i]);
      }
    }
    std::sort(split.folds[f].val_ids.begin(), split.folds[f].val_ids.end());
    std::sort(split.folds[f].train_ids.begin(), split.folds[f].train_ids.end());
  }
  return split;
}

InteractionLog window_questions(const InteractionLog& log, int max_questions,
                                bool truncate_last) {
  if (max_questions < 1) {
    throw DataError("max_questions must be >= 1");
  }
  InteractionLog out;
  out.n_questions = log.n_questions;
  out.n_kcs = log.n_kcs;
  out.kc_map = log.kc_map;
  for (const auto& seq : log.students) {
    const std::size_t len = seq.size();
    const std::size_t w = static_cast<std::size_t>(max_questions);
    if (len <= w) {
      out.students.push_back(seq);
    } else if (truncate_last) {
      out.students.emplace_back(seq.end() - w, seq.end());
    } else {
      for (std::size_t start = 0; start < len; start += w) {
        const std::size_t stop = std::min(start + w, len);
        out.students.emplace_back(seq.begin() + start, seq.begin() + stop);
      }
    }
  }
  return out;
}

InteractionLog subset_students(const InteractionLog& log,
                               const std::vector<StudentId>& ids) {
  InteractionLog out;
  out.n_questions = log.n_questions;
  out.n_kcs = log.n_kcs;
  out.kc_map = log.kc_map;
  out.students.reserve(ids.size());
  for (StudentId id : ids) {
    out.students.push_back(log.students.at(id));
  }
  return out;
}

}  // namespace kt
