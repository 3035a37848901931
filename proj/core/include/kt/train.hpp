#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kt/eval.hpp"
#include "kt/models.hpp"

namespace kt {

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int batch_size = 0;  // 0 = family default: 128 for DKT/DKT+, 24 otherwise
  int max_epochs = 30;
  int patience = 5;  // early stopping on validation AUC
  std::uint64_t seed = 0;
  // DKT+ regularizer weights
  double lambda_r = 0.1;
  double lambda_w1 = 0.03;
  double lambda_w2 = 3.0;
  // The cheap one-by-one protocol scores validation by default; this switches
  // to the costly all-in-one protocol.
  bool val_all_in_one = false;

  int resolved_batch_size(ModelFamily family) const {
    if (batch_size > 0) return batch_size;
    return family == ModelFamily::kDkt || family == ModelFamily::kDktPlus ? 128 : 24;
  }
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_auc = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> curve;
  int best_epoch = -1;
  double best_val_auc = 0.0;
};

class Adam {
 public:
  Adam(ParamList& params, const TrainConfig& cfg);
  void zero_grad();
  void step();

 private:
  ParamList& params_;
  TrainConfig cfg_;
  std::vector<ad::Matrix> m_, v_;
  long t_ = 0;
};

/// DKT+ penalty for one sequence: current-step reconstruction plus L1/L2
/// smoothness of consecutive output vectors, each normalized per the step
/// count and KC count. outputs is the (T+1) x |C| logit matrix.
ad::NodePtr dkt_plus_regularizers(ad::Tape& t, const ad::NodePtr& outputs,
                                  const std::vector<KcId>& kcs,
                                  const std::vector<double>& targets,
                                  const TrainConfig& cfg);

/// Train on train_log, early-stop on val_log AUC, restore the best epoch's
/// parameters into the model. Deterministic under cfg.seed. Throws
/// DivergenceError if the loss goes non-finite.
TrainResult train_fold(Model& model, const InteractionLog& train_log,
                       const InteractionLog& val_log, const TrainConfig& cfg);

}  // namespace kt
