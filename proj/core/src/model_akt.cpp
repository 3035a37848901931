#include "kt/errors.hpp"
#include "kt/models.hpp"
#include "kt/rng.hpp"

namespace kt {
namespace {

// AKT: a question encoder contextualizes difficulty-scaled question-KC
// embeddings, a knowledge encoder contextualizes response embeddings (both
// under a lower-triangular mask including the diagonal), and a knowledge
// retriever attends the question stream over the knowledge stream under a
// strictly lower-triangular mask. All attention is monotonic: pre-softmax
// scores decay as exp(-theta_h * |i - j|) with a learned positive rate per
// head. No absolute positional table exists anywhere in this family.
//
// Variant hooks:
//   ml      mask label on the knowledge inputs (adds g_MASK and f_(c,MASK))
//   qm      retriever mask additionally denies same-question keys
//   fuse    per-question averaged embeddings, no expansion
//   recency DE(d) added to the retriever's value vectors only, leaving
//           attention weights untouched
class AktModel final : public Model {
 public:
  AktModel(const ModelConfig& config, std::uint64_t seed) : Model(config) {
    auto rng = make_engine(substream(seed, "init"));
    const int d = config.dims.d_model;

    rasch_ = RaschEmbedding::create(config.n_questions, config.n_kcs, d,
                                    config.flags.ml, rng);
    rasch_.collect(params_, "rasch");

    if (config.flags.recency != RecencyMode::kNone) {
      rec_ = RecencyEncoder::create(d, d, config.flags.recency, rng);
      rec_.collect(params_, "recency");
    }

    for (int l = 0; l < config.dims.n_layers; ++l) {
      q_blocks_.push_back(TransformerBlock::create(d, config.dims.n_heads, 4 * d,
                                                   /*monotonic=*/true, rng));
      q_blocks_.back().collect(params_, "qenc" + std::to_string(l));
    }
    for (int l = 0; l < config.dims.n_layers; ++l) {
      k_blocks_.push_back(TransformerBlock::create(d, config.dims.n_heads, 4 * d,
                                                   /*monotonic=*/true, rng));
      k_blocks_.back().collect(params_, "kenc" + std::to_string(l));
    }

    retriever_ = MultiHeadAttention::create(d, config.dims.n_heads, rng);
    retriever_.collect(params_, "retriever");
    retr_theta_ = ad::leaf(ad::Matrix::Constant(config.dims.n_heads, 1, 0.5413));
    params_.push_back({"retriever.theta", retr_theta_});

    head_w1_ = ad::leaf(init_uniform(2 * d, d, rng));
    head_b1_ = ad::leaf(ad::Matrix::Zero(1, d));
    head_w2_ = ad::leaf(init_uniform(d, 1, rng));
    head_b2_ = ad::leaf(ad::Matrix::Zero(1, 1));
    params_.push_back({"head.w1", head_w1_});
    params_.push_back({"head.b1", head_b1_});
    params_.push_back({"head.w2", head_w2_});
    params_.push_back({"head.b2", head_b2_});
  }

  std::vector<SeqForward> forward(ad::Tape& t, const BatchInput& batch,
                                  const ForwardOptions& opts) override {
    if (batch.fused != config_.flags.fuse) {
      throw ShapeError("batch layout does not match the fuse flag");
    }
    std::vector<SeqForward> out;
    out.reserve(batch.batch);
    for (int r = 0; r < batch.batch; ++r) {
      const RowView row = extract_row(batch, r);
      if (row.len == 0) {
        out.push_back({nullptr, nullptr});
        continue;
      }
      out.push_back(forward_row(t, row, opts));
    }
    return out;
  }

 private:
  ad::NodePtr question_stream(ad::Tape& t, const RowView& row) const {
    if (!config_.flags.fuse) {
      return rasch_.question_rows(t, row.question, row.kc);
    }
    auto mu_rows = ad::gather_rows(t, rasch_.mu, row.question);
    auto mean_kc = ad::gather_rows_mean(t, rasch_.base.kc, row.fused_kcs,
                                        row.fused_offsets);
    auto mean_var = ad::gather_rows_mean(t, rasch_.variation, row.fused_kcs,
                                         row.fused_offsets);
    return ad::add(t, mean_kc, ad::rowwise_scale(t, mean_var, mu_rows));
  }

  ad::NodePtr knowledge_stream(ad::Tape& t, const RowView& row) const {
    if (!config_.flags.fuse) {
      return rasch_.knowledge_rows(t, row.question, row.kc, row.label);
    }
    // Fused: mean_c e_c + g_r + mu_q * mean_c f_(c,r).
    auto mu_rows = ad::gather_rows(t, rasch_.mu, row.question);
    auto mean_kc = ad::gather_rows_mean(t, rasch_.base.kc, row.fused_kcs,
                                        row.fused_offsets);
    std::vector<std::int32_t> resp_idx(row.label.size());
    for (std::size_t i = 0; i < row.label.size(); ++i) {
      resp_idx[i] = static_cast<std::int32_t>(row.label[i]);
    }
    std::vector<std::int32_t> f_idx(row.fused_kcs.size());
    for (int step = 0; step < row.len; ++step) {
      for (std::int32_t k = row.fused_offsets[step]; k < row.fused_offsets[step + 1];
           ++k) {
        f_idx[k] = static_cast<std::int32_t>(row.label[step]) * config_.n_kcs +
                   row.fused_kcs[k];
      }
    }
    auto mean_f = ad::gather_rows_mean(t, rasch_.f, f_idx, row.fused_offsets);
    auto base = ad::add(t, mean_kc, ad::gather_rows(t, rasch_.base.resp, resp_idx));
    return ad::add(t, base, ad::rowwise_scale(t, mean_f, mu_rows));
  }

  SeqForward forward_row(ad::Tape& t, const RowView& row,
                         const ForwardOptions& opts) const {
    const auto enc_allow = causal_mask(row.len, /*strict=*/false);
    const auto dist = index_distances(row.len);

    AttentionOptions aopts;
    aopts.dropout = config_.dims.dropout;
    aopts.training = opts.training;
    aopts.rng = opts.rng;

    auto x = question_stream(t, row);
    for (const auto& b : q_blocks_) x = b.apply(t, x, x, x, enc_allow, &dist, aopts);

    auto y = knowledge_stream(t, row);
    for (const auto& b : k_blocks_) y = b.apply(t, y, y, y, enc_allow, &dist, aopts);

    if (config_.flags.recency != RecencyMode::kNone) {
      y = ad::add(t, y, rec_.encode(t, row.recency));
    }

    const auto horizon = row.horizon(opts.question_start_horizon);
    const auto retr_allow = config_.flags.qm
                                ? question_mask(row.block_id, horizon)
                                : horizon_mask(horizon);

    AttentionOptions ropts = aopts;
    ropts.record_weights = opts.record_retriever_weights;
    auto h = multi_head_attention(t, retriever_, x, x, y, retr_allow, retr_theta_,
                                  &dist, ropts);

    auto z = ad::concat_cols(t, {h, x});
    auto hidden = ad::relu(t, ad::linear(t, z, head_w1_, head_b1_));
    if (opts.training && config_.dims.dropout > 0.0) {
      hidden = ad::dropout(t, hidden, config_.dims.dropout, *opts.rng);
    }
    return {ad::linear(t, hidden, head_w2_, head_b2_), nullptr};
  }

  RaschEmbedding rasch_;
  RecencyEncoder rec_;
  std::vector<TransformerBlock> q_blocks_, k_blocks_;
  MultiHeadAttention retriever_;
  ad::NodePtr retr_theta_;
  ad::NodePtr head_w1_, head_b1_, head_w2_, head_b2_;
};

}  // namespace

std::unique_ptr<Model> make_akt_model(const ModelConfig& config, std::uint64_t seed) {
  return std::make_unique<AktModel>(config, seed);
}

}  // namespace kt
