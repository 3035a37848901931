#include "kt/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kt/errors.hpp"
#include "kt/rng.hpp"

namespace kt {

Adam::Adam(ParamList& params, const TrainConfig& cfg) : params_(params), cfg_(cfg) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& p : params_) {
    m_.push_back(ad::Matrix::Zero(p.node->rows(), p.node->cols()));
    v_.push_back(ad::Matrix::Zero(p.node->rows(), p.node->cols()));
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.node->zero_grad();
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& node = *params_[i].node;
    if (!node.requires_grad || node.grad.size() == 0) continue;
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * node.grad;
    v_[i] = cfg_.beta2 * v_[i].array().matrix() +
            (1.0 - cfg_.beta2) * node.grad.cwiseProduct(node.grad);
    node.value.array() -= cfg_.lr * (m_[i].array() / bc1) /
                          ((v_[i].array() / bc2).sqrt() + cfg_.eps);
  }
}

ad::NodePtr dkt_plus_regularizers(ad::Tape& t, const ad::NodePtr& outputs,
                                  const std::vector<KcId>& kcs,
                                  const std::vector<double>& targets,
                                  const TrainConfig& cfg) {
  const int T = static_cast<int>(kcs.size());
  const auto n_kcs = outputs->cols();

  // Consumed outputs y_1..y_T (row k of `outputs` consumed k steps).
  auto consumed = ad::slice_rows(t, outputs, 1, T);

  // Reconstruction: align the output that consumed step t with r_t.
  std::vector<std::int32_t> iota(T);
  std::iota(iota.begin(), iota.end(), 0);
  auto recon_logits = ad::gather_rc(t, consumed, iota, kcs);
  auto reg = ad::scale(t, ad::bce_with_logits_sum(t, recon_logits, targets),
                       cfg.lambda_r / T);

  if (T > 1) {
    auto probs = ad::sigmoid(t, consumed);
    auto diff = ad::sub(t, ad::slice_rows(t, probs, 1, T - 1),
                        ad::slice_rows(t, probs, 0, T - 1));
    const double norm = static_cast<double>(T - 1) * static_cast<double>(n_kcs);
    auto w1 = ad::scale(t, ad::sum_all(t, ad::abs_(t, diff)), cfg.lambda_w1 / norm);
    auto w2 = ad::scale(t, ad::sum_all(t, ad::square(t, diff)), cfg.lambda_w2 / norm);
    reg = ad::add(t, reg, ad::add(t, w1, w2));
  }
  return reg;
}

namespace {

/// Expand (or fuse) a log into the per-student batch rows a model consumes.
std::vector<BatchInput> make_row_pool(Model& model, const InteractionLog& log) {
  std::vector<BatchInput> rows;
  rows.reserve(log.students.size());
  for (StudentId s = 0; s < log.n_students(); ++s) {
    InteractionLog one;
    one.n_questions = log.n_questions;
    one.n_kcs = log.n_kcs;
    one.kc_map = log.kc_map;
    one.students.push_back(log.students[s]);
    if (model.config().flags.fuse) {
      rows.push_back(make_fused_batch(fuse_groups(one)));
    } else {
      rows.push_back(make_batch(expand(one, model.config().mask_policy())));
    }
  }
  return rows;
}

}  // namespace

TrainResult train_fold(Model& model, const InteractionLog& train_log,
                       const InteractionLog& val_log, const TrainConfig& cfg) {
  const auto rows = make_row_pool(model, train_log);
  const int batch_size = cfg.resolved_batch_size(model.config().family);
  const bool dkt_plus = model.config().family == ModelFamily::kDktPlus;

  Adam adam(model.params(), cfg);
  TrainResult result;
  std::vector<ad::Matrix> best_values;
  int epochs_since_best = 0;

  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    auto shuffle_rng = make_engine(substream(cfg.seed, "data-shuffle", epoch));
    auto dropout_rng = make_engine(substream(cfg.seed, "dropout", epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_loss = 0.0;
    long epoch_steps = 0;

    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(batch_size)) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(batch_size));

      adam.zero_grad();
      ad::Tape tape;
      ForwardOptions opts;
      opts.training = true;
      opts.rng = &dropout_rng;

      // Per-sequence graphs; the scaled sums add up to the batch-mean loss.
      long batch_steps = 0;
      for (std::size_t i = begin; i < end; ++i) batch_steps += rows[order[i]].len(0);

      ad::NodePtr bce_total;
      ad::NodePtr reg_total;
      long n_seqs = 0;
      for (std::size_t i = begin; i < end; ++i) {
        const BatchInput& row = rows[order[i]];
        const auto fwd = model.forward(tape, row, opts);
        const RowView view = extract_row(row, 0);
        auto seq_bce =
            ad::bce_with_logits_sum(tape, fwd[0].step_logits, view.target);
        bce_total = bce_total ? ad::add(tape, bce_total, seq_bce) : seq_bce;
        if (dkt_plus) {
          auto reg = dkt_plus_regularizers(tape, fwd[0].dkt_outputs, view.kc,
                                           view.target, cfg);
          reg_total = reg_total ? ad::add(tape, reg_total, reg) : reg;
        }
        ++n_seqs;
      }
      // Step-mean BCE plus the sequence-mean DKT+ penalty.
      auto loss = ad::scale(tape, bce_total, 1.0 / static_cast<double>(batch_steps));
      if (reg_total) {
        loss = ad::add(tape, loss,
                       ad::scale(tape, reg_total, 1.0 / static_cast<double>(n_seqs)));
      }

      if (!std::isfinite(loss->value(0, 0))) {
        throw DivergenceError("Divergence: non-finite loss at epoch " +
                              std::to_string(epoch));
      }
      tape.backward(loss);
      adam.step();
      epoch_loss += loss->value(0, 0) * static_cast<double>(batch_steps);
      epoch_steps += batch_steps;
    }

    const EvalReport val = cfg.val_all_in_one ? evaluate_all_in_one(model, val_log)
                                              : evaluate_one_by_one(model, val_log);

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss / static_cast<double>(epoch_steps);
    stats.val_auc = val.auc;
    result.curve.push_back(stats);

    if (result.best_epoch < 0 || val.auc > result.best_val_auc) {
      result.best_epoch = epoch;
      result.best_val_auc = val.auc;
      best_values.clear();
      for (const auto& p : model.params()) best_values.push_back(p.node->value);
      epochs_since_best = 0;
    } else if (++epochs_since_best >= cfg.patience) {
      break;
    }
  }

  for (std::size_t i = 0; i < best_values.size(); ++i) {
    model.params()[i].node->value = best_values[i];
  }
  return result;
}

}  // namespace kt
