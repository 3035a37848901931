#pragma once

#include <memory>
#include <random>
#include <vector>

#include "kt/attention.hpp"
#include "kt/autodiff.hpp"
#include "kt/batch.hpp"
#include "kt/model_config.hpp"

namespace kt {

struct ForwardOptions {
  bool training = false;
  /// All-in-one evaluation for leak-prone models: the history visible to the
  /// prediction at step t ends at t's question block instead of at t.
  bool question_start_horizon = false;
  std::mt19937_64* rng = nullptr;  // dropout stream, required when training
  /// AKT only: per-head knowledge-retriever weights, appended for inspection.
  std::vector<ad::Matrix>* record_retriever_weights = nullptr;
};

/// Forward output for one batch row (valid steps only).
struct SeqForward {
  ad::NodePtr step_logits;  // len x 1; probability = sigmoid(logit)
  /// DKT family: full (len+1) x |C| logit matrix, row k = output after
  /// consuming k steps. Needed by the DKT+ regularizers.
  ad::NodePtr dkt_outputs;
};

/// One sequence of a BatchInput unpacked into dense per-step vectors.
struct RowView {
  int len = 0;
  std::vector<KcId> kc;
  std::vector<QuestionId> question;
  std::vector<InputLabel> label;
  std::vector<std::int32_t> recency;
  std::vector<double> target;
  std::vector<std::int32_t> block_id;
  std::vector<std::int32_t> block_start;
  std::vector<std::int32_t> fused_kcs;
  std::vector<std::int32_t> fused_offsets;

  /// History horizon per step: block_start under the all-in-one protocol for
  /// leak-prone models, the step index itself otherwise.
  std::vector<std::int32_t> horizon(bool question_start) const;
};

RowView extract_row(const BatchInput& batch, int row);

class Model {
 public:
  explicit Model(ModelConfig config) : config_(std::move(config)) {}
  virtual ~Model() = default;

  const ModelConfig& config() const { return config_; }
  ParamList& params() { return params_; }
  const ParamList& params() const { return params_; }

  virtual std::vector<SeqForward> forward(ad::Tape& t, const BatchInput& batch,
                                          const ForwardOptions& opts) = 0;

 protected:
  ModelConfig config_;
  ParamList params_;
};

/// Build a model with seeded parameter initialization. Validates the config.
std::unique_ptr<Model> make_model(const ModelConfig& config, std::uint64_t seed);

}  // namespace kt
