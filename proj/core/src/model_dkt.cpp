#include <cmath>

#include "kt/errors.hpp"
#include "kt/models.hpp"
#include "kt/rng.hpp"

namespace kt {
namespace {

// DKT and DKT+ over the expanded KC sequence (or the fused per-question
// sequence). The LSTM consumes input embeddings; the output layer produces
// per-KC logits; the prediction at step t reads the output row that consumed
// exactly horizon(t) steps, so row t (inputs up to t-1) in the one-by-one
// protocol and row block_start(t) in the all-in-one protocol.
//
// Embedding choice follows the family: plain DKT uses one table per
// (KC, label) pair; DKT with the mask label uses the separate KC + response
// vectors; DKT+ always uses the combined table (mask-extended under ml);
// fuse averages separate KC embeddings over the question.
class DktModel final : public Model {
 public:
  DktModel(const ModelConfig& config, std::uint64_t seed) : Model(config) {
    auto rng = make_engine(substream(seed, "init"));
    const int d = config.dims.d_model;

    // Autoregressive fills and fused averages need the separate response
    // vectors; DKT-ML uses them too (e_c + g_MASK). DKT+ and plain DKT use
    // the combined per-(KC, label) table.
    use_separate_ = config.flags.fuse || config.flags.ad ||
                    (config.family == ModelFamily::kDkt && config.flags.ml);
    if (use_separate_) {
      sep_ = SeparateEmbedding::create(config.n_kcs, d, config.flags.ml, rng);
      sep_.collect(params_, "emb");
    } else {
      comb_ = CombinedEmbedding::create(config.n_kcs, d, config.flags.ml, rng);
      comb_.collect(params_, "emb");
    }
    if (config.flags.recency != RecencyMode::kNone) {
      rec_ = RecencyEncoder::create(d, d, config.flags.recency, rng);
      rec_.collect(params_, "recency");
    }

    layers_.resize(config.dims.n_layers);
    for (int l = 0; l < config.dims.n_layers; ++l) {
      const int in_dim = d;  // d_model == hidden size
      layers_[l].wx = ad::leaf(init_uniform(in_dim, 4 * d, rng));
      layers_[l].wh = ad::leaf(init_uniform(d, 4 * d, rng));
      layers_[l].b = ad::leaf(ad::Matrix::Zero(1, 4 * d));
      const std::string p = "lstm" + std::to_string(l);
      params_.push_back({p + ".wx", layers_[l].wx});
      params_.push_back({p + ".wh", layers_[l].wh});
      params_.push_back({p + ".b", layers_[l].b});
    }
    w_out_ = ad::leaf(init_uniform(d, config.n_kcs, rng));
    b_out_ = ad::leaf(ad::Matrix::Zero(1, config.n_kcs));
    params_.push_back({"out.w", w_out_});
    params_.push_back({"out.b", b_out_});
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
      out.push_back(config_.flags.ad ? forward_autoregressive(t, row, opts)
                                     : forward_plain(t, row, opts));
    }
    return out;
  }

 private:
  ad::NodePtr input_rows(ad::Tape& t, const RowView& row) const {
    if (config_.flags.fuse) {
      return sep_.fused_rows(t, row.fused_kcs, row.fused_offsets, row.label);
    }
    auto x = use_separate_ ? sep_.rows(t, row.kc, row.label)
                           : comb_.rows(t, row.kc, row.label);
    if (config_.flags.recency != RecencyMode::kNone) {
      x = ad::add(t, x, rec_.encode(t, row.recency));
    }
    return x;
  }

  ad::NodePtr run_lstm(ad::Tape& t, ad::NodePtr x) const {
    for (const auto& l : layers_) x = ad::lstm_seq(t, x, l.wx, l.wh, l.b);
    return x;
  }

  SeqForward forward_plain(ad::Tape& t, const RowView& row,
                           const ForwardOptions& opts) const {
    const int d = config_.dims.d_model;
    auto hs = run_lstm(t, input_rows(t, row));
    auto with_init = ad::vstack(t, {ad::constant(ad::Matrix::Zero(1, d)), hs});
    auto logits_all = ad::linear(t, with_init, w_out_, b_out_);  // (T+1) x |C|
    return {gather_step_logits(t, logits_all, row, opts), logits_all};
  }

  ad::NodePtr gather_step_logits(ad::Tape& t, const ad::NodePtr& logits_all,
                                 const RowView& row,
                                 const ForwardOptions& opts) const {
    const auto h = row.horizon(opts.question_start_horizon);
    if (!config_.flags.fuse) {
      return ad::gather_rc(t, logits_all, h, row.kc);
    }
    // Fused prediction: mean logit over the question's KCs.
    std::vector<std::int32_t> rows, cols, offsets;
    for (int step = 0; step < row.len; ++step) {
      offsets.push_back(static_cast<std::int32_t>(cols.size()));
      for (std::int32_t k = row.fused_offsets[step]; k < row.fused_offsets[step + 1];
           ++k) {
        rows.push_back(h[step]);
        cols.push_back(row.fused_kcs[k]);
      }
    }
    offsets.push_back(static_cast<std::int32_t>(cols.size()));
    return ad::gather_rc_mean(t, logits_all, rows, cols, offsets);
  }

  /// Within each question block, non-final steps consume a label derived
  /// from the model's own causal prediction at that step; only the final
  /// step consumes the true response. Strictly sequential.
  SeqForward forward_autoregressive(ad::Tape& t, const RowView& row,
                                    const ForwardOptions& opts) const {
    const int d = config_.dims.d_model;

    ad::NodePtr recency_rows;
    if (config_.flags.recency != RecencyMode::kNone) {
      recency_rows = rec_.encode(t, row.recency);
    }

    const int n_layers = config_.dims.n_layers;
    std::vector<ad::NodePtr> h(n_layers), c(n_layers);
    for (int l = 0; l < n_layers; ++l) {
      h[l] = ad::constant(ad::Matrix::Zero(1, d));
      c[l] = ad::constant(ad::Matrix::Zero(1, d));
    }

    std::vector<ad::NodePtr> out_rows;  // (T+1) rows of per-KC logits
    out_rows.reserve(row.len + 1);
    for (int step = 0; step < row.len; ++step) {
      auto logits_row = ad::linear(t, h[n_layers - 1], w_out_, b_out_);
      out_rows.push_back(logits_row);

      // Resolve the input label for this step.
      ad::NodePtr resp_row;
      if (row.label[step] == InputLabel::kAutoFill) {
        const double z = logits_row->value(0, row.kc[step]);
        const double p = 1.0 / (1.0 + std::exp(-z));
        if (config_.flags.soft_ad) {
          auto g0 = ad::slice_rows(t, sep_.resp, 0, 1);
          auto g1 = ad::slice_rows(t, sep_.resp, 1, 1);
          resp_row = ad::add(t, ad::scale(t, g1, p), ad::scale(t, g0, 1.0 - p));
        } else {
          resp_row = ad::slice_rows(t, sep_.resp, p >= 0.5 ? 1 : 0, 1);
        }
      } else {
        resp_row = ad::slice_rows(t, sep_.resp,
                                  static_cast<int>(row.label[step]), 1);
      }
      auto x = ad::add(t, ad::gather_rows(t, sep_.kc, {row.kc[step]}), resp_row);
      if (recency_rows) {
        x = ad::add(t, x, ad::slice_rows(t, recency_rows, step, 1));
      }

      for (int l = 0; l < n_layers; ++l) {
        auto z = ad::add_rowvec(
            t, ad::add(t, ad::matmul(t, x, layers_[l].wx),
                       ad::matmul(t, h[l], layers_[l].wh)),
            layers_[l].b);
        auto gi = ad::sigmoid(t, ad::slice_cols(t, z, 0, d));
        auto gf = ad::sigmoid(t, ad::slice_cols(t, z, d, d));
        auto gg = ad::tanh_(t, ad::slice_cols(t, z, 2 * d, d));
        auto go = ad::sigmoid(t, ad::slice_cols(t, z, 3 * d, d));
        c[l] = ad::add(t, ad::cmul(t, gf, c[l]), ad::cmul(t, gi, gg));
        h[l] = ad::cmul(t, go, ad::tanh_(t, c[l]));
        x = h[l];
      }
    }
    out_rows.push_back(ad::linear(t, h[n_layers - 1], w_out_, b_out_));

    auto logits_all = ad::vstack(t, out_rows);
    return {gather_step_logits(t, logits_all, row, opts), logits_all};
  }

  bool use_separate_ = false;
  SeparateEmbedding sep_;
  CombinedEmbedding comb_;
  RecencyEncoder rec_;
  struct LstmLayer {
    ad::NodePtr wx, wh, b;
  };
  std::vector<LstmLayer> layers_;
  ad::NodePtr w_out_, b_out_;
};

}  // namespace

std::unique_ptr<Model> make_dkt_model(const ModelConfig& config, std::uint64_t seed) {
  return std::make_unique<DktModel>(config, seed);
}

}  // namespace kt
