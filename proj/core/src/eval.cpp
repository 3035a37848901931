#include "kt/eval.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "kt/errors.hpp"
#include "kt/metrics.hpp"

namespace kt {
namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

BatchInput single_row_batch(Model& model, const InteractionLog& log, StudentId s) {
  InteractionLog one;
  one.n_questions = log.n_questions;
  one.n_kcs = log.n_kcs;
  one.kc_map = log.kc_map;
  one.students.push_back(log.students[s]);
  if (model.config().flags.fuse) {
    return make_fused_batch(fuse_groups(one));
  }
  return make_batch(expand(one, model.config().mask_policy()));
}

}  // namespace

std::string to_string(Protocol p) {
  return p == Protocol::kOneByOne ? "one_by_one" : "all_in_one";
}

std::vector<std::vector<double>> predict_steps(Model& model,
                                               const InteractionLog& log,
                                               Protocol protocol) {
  ForwardOptions opts;
  opts.training = false;
  opts.question_start_horizon =
      protocol == Protocol::kAllInOne && !model.config().leak_free();

  std::vector<std::vector<double>> out(log.students.size());
  for (StudentId s = 0; s < log.n_students(); ++s) {
    ad::Tape tape;
    const BatchInput batch = single_row_batch(model, log, s);
    const auto fwd = model.forward(tape, batch, opts);
    const auto& logits = fwd.at(0).step_logits;
    out[s].resize(logits->rows());
    for (Eigen::Index i = 0; i < logits->rows(); ++i) {
      out[s][i] = sigmoid(logits->value(i, 0));
    }
  }
  return out;
}

namespace {

EvalReport evaluate(Model& model, const InteractionLog& log, Protocol protocol) {
  const auto start = std::chrono::steady_clock::now();
  EvalReport report;
  report.protocol = protocol;

  const auto probs = predict_steps(model, log, protocol);
  const bool fused = model.config().flags.fuse;

  for (StudentId s = 0; s < log.n_students(); ++s) {
    const auto& seq = log.students[s];
    if (fused) {
      // One step per question already; the protocols coincide.
      for (std::size_t t = 0; t < seq.size(); ++t) {
        report.rows.push_back({s, static_cast<std::int32_t>(t), seq[t].question,
                               probs[s][t], seq[t].correct});
      }
      continue;
    }
    // Expanded steps, grouped per question in order.
    std::size_t step = 0;
    for (std::size_t q = 0; q < seq.size(); ++q) {
      const std::size_t n_kcs = log.kc_map[seq[q].question].size();
      if (protocol == Protocol::kOneByOne) {
        for (std::size_t k = 0; k < n_kcs; ++k) {
          report.rows.push_back({s, static_cast<std::int32_t>(q), seq[q].question,
                                 probs[s][step + k], seq[q].correct});
        }
      } else {
        double mean = 0.0;
        for (std::size_t k = 0; k < n_kcs; ++k) mean += probs[s][step + k];
        mean /= static_cast<double>(n_kcs);
        report.rows.push_back({s, static_cast<std::int32_t>(q), seq[q].question,
                               mean, seq[q].correct});
      }
      step += n_kcs;
    }
  }

  std::vector<double> p;
  std::vector<int> y;
  p.reserve(report.rows.size());
  y.reserve(report.rows.size());
  for (const auto& r : report.rows) {
    p.push_back(r.prediction);
    y.push_back(r.target);
  }
  report.auc = auc(p, y);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace

EvalReport evaluate_one_by_one(Model& model, const InteractionLog& log) {
  return evaluate(model, log, Protocol::kOneByOne);
}

EvalReport evaluate_all_in_one(Model& model, const InteractionLog& log) {
  return evaluate(model, log, Protocol::kAllInOne);
}

void write_report_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "student_id,question_ordinal,question_id,prediction,target\n";
  out.precision(17);
  for (const auto& r : report.rows) {
    out << r.student << ',' << r.question_ordinal << ',' << r.question << ','
        << r.prediction << ',' << r.target << '\n';
  }
}

}  // namespace kt
