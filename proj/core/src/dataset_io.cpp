#include "kt/dataset_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kt/errors.hpp"

namespace kt {
namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void save_dataset(const InteractionLog& log, const std::string& dir) {
  log.validate();
  std::filesystem::create_directories(dir);

  const DatasetStats st = dataset_stats(log);
  nlohmann::json meta;
  meta["format_version"] = 1;
  meta["n_questions"] = log.n_questions;
  meta["n_kcs"] = log.n_kcs;
  meta["n_students"] = log.n_students();
  meta["stats"]["n_kc_groups"] = st.n_kc_groups;
  meta["stats"]["mean_kcs_per_question"] = st.mean_kcs_per_question;
  write_file(dir + "/meta.json", meta.dump(2) + "\n");

  std::ostringstream kcmap;
  kcmap << "question_id,kc_id\n";
  for (QuestionId q = 0; q < log.n_questions; ++q) {
    for (KcId c : log.kc_map[q]) {
      kcmap << q << ',' << c << '\n';
    }
  }
  write_file(dir + "/kcmap.csv", kcmap.str());

  std::ostringstream inter;
  inter << "student_id,step,question_id,correct\n";
  for (StudentId s = 0; s < log.n_students(); ++s) {
    const auto& seq = log.students[s];
    for (std::size_t t = 0; t < seq.size(); ++t) {
      inter << s << ',' << t << ',' << seq[t].question << ','
            << static_cast<int>(seq[t].correct) << '\n';
    }
  }
  write_file(dir + "/interactions.csv", inter.str());
}

InteractionLog load_dataset(const std::string& dir) {
  const nlohmann::json meta = nlohmann::json::parse(read_file(dir + "/meta.json"));
  InteractionLog log;
  log.n_questions = meta.at("n_questions").get<std::int32_t>();
  log.n_kcs = meta.at("n_kcs").get<std::int32_t>();
  log.kc_map.resize(log.n_questions);
  log.students.resize(meta.at("n_students").get<std::int32_t>());

  {
    std::istringstream in(read_file(dir + "/kcmap.csv"));
    std::string line;
    std::getline(in, line);  // header
    long q, c;
    char comma;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream row(line);
      if (!(row >> q >> comma >> c)) throw DataError("bad kcmap row: " + line);
      log.kc_map.at(q).push_back(static_cast<KcId>(c));
    }
  }
  {
    std::istringstream in(read_file(dir + "/interactions.csv"));
    std::string line;
    std::getline(in, line);  // header
    long s, t, q, r;
    char c1, c2, c3;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream row(line);
      if (!(row >> s >> c1 >> t >> c2 >> q >> c3 >> r)) {
        throw DataError("bad interactions row: " + line);
      }
      auto& seq = log.students.at(s);
      if (static_cast<long>(seq.size()) != t) {
        throw DataError("non-contiguous step index in interactions.csv: " + line);
      }
      seq.push_back({static_cast<QuestionId>(q), static_cast<Response>(r)});
    }
  }

  log.validate();
  return log;
}

std::uint64_t dataset_fingerprint(const std::string& dir) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const char* name : {"meta.json", "kcmap.csv", "interactions.csv"}) {
    const std::string bytes = read_file(dir + "/" + name);
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 0x100000001B3ULL;
    }
  }
  return h;
}

}  // namespace kt
