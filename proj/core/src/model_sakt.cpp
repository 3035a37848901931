#include "kt/errors.hpp"
#include "kt/models.hpp"
#include "kt/rng.hpp"

namespace kt {
namespace {

constexpr int kDefaultMaxSeqLen = 2048;

// SAKT: interaction embeddings (combined table, mask-extended under ml) plus
// a learned positional embedding; the query stream starts from the plain KC
// table and attends causally (strictly in the past) over the interactions.
// With the recency flag the positional term is replaced entirely by the
// recency encoding.
class SaktModel final : public Model {
 public:
  SaktModel(const ModelConfig& config, std::uint64_t seed) : Model(config) {
    if (config.flags.fuse || config.flags.ad) {
      throw ConfigError("SAKT supports ml and recency flags only");
    }
    auto rng = make_engine(substream(seed, "init"));
    const int d = config.dims.d_model;

    inter_ = CombinedEmbedding::create(config.n_kcs, d, config.flags.ml, rng);
    inter_.collect(params_, "inter");
    query_ = ad::leaf(init_uniform(config.n_kcs, d, rng));
    params_.push_back({"query.kc", query_});

    if (config.flags.recency != RecencyMode::kNone) {
      rec_ = RecencyEncoder::create(d, d, config.flags.recency, rng);
      rec_.collect(params_, "recency");
    } else {
      const int cap = config.dims.max_seq_len > 0 ? config.dims.max_seq_len
                                                  : kDefaultMaxSeqLen;
      pos_ = PositionalEmbedding::create(cap, d, rng);
      pos_.collect(params_, "pos");
    }

    blocks_.reserve(config.dims.n_layers);
    for (int l = 0; l < config.dims.n_layers; ++l) {
      blocks_.push_back(TransformerBlock::create(d, config.dims.n_heads, 4 * d,
                                                 /*monotonic=*/false, rng));
      blocks_.back().collect(params_, "block" + std::to_string(l));
    }
    w_out_ = ad::leaf(init_uniform(d, 1, rng));
    b_out_ = ad::leaf(ad::Matrix::Zero(1, 1));
    params_.push_back({"out.w", w_out_});
    params_.push_back({"out.b", b_out_});
  }

  std::vector<SeqForward> forward(ad::Tape& t, const BatchInput& batch,
                                  const ForwardOptions& opts) override {
    if (batch.fused) throw ShapeError("SAKT consumes expanded batches");
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
  SeqForward forward_row(ad::Tape& t, const RowView& row,
                         const ForwardOptions& opts) const {
    auto kv = inter_.rows(t, row.kc, row.label);
    if (config_.flags.recency != RecencyMode::kNone) {
      kv = ad::add(t, kv, rec_.encode(t, row.recency));
    } else {
      kv = ad::add(t, kv, pos_.encode(t, 0, row.len));
    }

    const auto allow = horizon_mask(row.horizon(opts.question_start_horizon));
    AttentionOptions aopts;
    aopts.dropout = config_.dims.dropout;
    aopts.training = opts.training;
    aopts.rng = opts.rng;

    auto stream = ad::gather_rows(t, query_, row.kc);
    for (const auto& block : blocks_) {
      stream = block.apply(t, stream, kv, kv, allow, nullptr, aopts);
    }
    return {ad::linear(t, stream, w_out_, b_out_), nullptr};
  }

  CombinedEmbedding inter_;
  ad::NodePtr query_;
  PositionalEmbedding pos_;
  RecencyEncoder rec_;
  std::vector<TransformerBlock> blocks_;
  ad::NodePtr w_out_, b_out_;
};

}  // namespace

std::unique_ptr<Model> make_sakt_model(const ModelConfig& config, std::uint64_t seed) {
  return std::make_unique<SaktModel>(config, seed);
}

}  // namespace kt
