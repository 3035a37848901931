#pragma once

#include <string>

#include "kt/encoders.hpp"
#include "kt/expand.hpp"

namespace kt {

enum class ModelFamily { kDkt, kDktPlus, kSakt, kAkt };

std::string to_string(ModelFamily f);
ModelFamily family_from_string(const std::string& s);

struct ModelFlags {
  bool ml = false;    // mask label
  bool ad = false;    // autoregressive decoding (DKT only)
  bool fuse = false;  // averaged KC embeddings, no expansion (DKT/AKT)
  bool qm = false;    // question-level attention mask (AKT only)
  RecencyMode recency = RecencyMode::kNone;
  bool soft_ad = false;  // blend g_0/g_1 by predicted probability instead of
                         // hard-thresholding at 0.5
};

struct ModelDims {
  int d_model = 256;
  int n_heads = 8;
  int n_layers = 2;
  double dropout = 0.05;
  int max_seq_len = 0;  // positional-table capacity; 0 = derive from data
};

struct ModelConfig {
  ModelFamily family = ModelFamily::kDkt;
  ModelFlags flags;
  ModelDims dims;
  int n_questions = 0;
  int n_kcs = 0;

  /// Throws ConfigError on unsupported flag combinations:
  /// ad requires the DKT family; qm requires AKT and excludes ml/ad/fuse;
  /// fuse requires DKT or AKT, excludes ml/ad and recency (KC-level recency
  /// has no meaning for an averaged question embedding).
  void validate() const;

  /// The expansion policy this configuration consumes.
  MaskPolicy mask_policy() const;

  /// True when intra-question ground truth can never reach the inputs, so
  /// the two evaluation protocols coincide step-for-step.
  bool leak_free() const {
    return flags.ml || flags.ad || flags.qm || flags.fuse;
  }

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

}  // namespace kt
