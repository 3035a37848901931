#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "kt/autodiff.hpp"
#include "kt/encoders.hpp"

namespace kt {

// Attention masks are dense 0/1 matrices; entry (i, j) = 1 allows query i to
// attend to key j. Row-normalization happens over allowed entries only, and
// a fully-denied row produces a zero context vector (see masked_softmax).

/// allow(i <- j) iff j < i (strict) or j <= i.
ad::Matrix causal_mask(int len, bool strict);

/// allow(i <- j) iff j < horizon[i]. The one-by-one protocol and training
/// use horizon[i] = i; the all-in-one protocol for leak-prone models uses
/// horizon[i] = block_start[i].
ad::Matrix horizon_mask(const std::vector<std::int32_t>& horizon);

/// allow(i <- j) iff j < horizon[i] AND block[j] != block[i] (the
/// question-level mask: same-question and non-past entries are denied).
ad::Matrix question_mask(const std::vector<std::int32_t>& block_ids,
                         const std::vector<std::int32_t>& horizon);

/// |i - j| index distances, used by the monotonic attention decay.
ad::Matrix index_distances(int len);

struct MultiHeadAttention {
  ad::NodePtr wq, wk, wv, wo;  // each d x d
  int n_heads = 1;

  static MultiHeadAttention create(int d_model, int n_heads, std::mt19937_64& rng);
  void collect(ParamList& out, const std::string& prefix) const;
};

struct AttentionOptions {
  double dropout = 0.0;            // applied to attention weights when training
  bool training = false;
  std::mt19937_64* rng = nullptr;
  /// When set, per-head post-softmax weights are appended here (tests).
  std::vector<ad::Matrix>* record_weights = nullptr;
};

/// Scaled dot-product attention over all heads. When theta_raw (n_heads x 1)
/// is non-null, pre-softmax scores are multiplied by the per-head decay
/// exp(-softplus(theta_raw[h]) * dist) -- monotonic attention; theta -> 0
/// recovers standard attention.
ad::NodePtr multi_head_attention(ad::Tape& t, const MultiHeadAttention& p,
                                 const ad::NodePtr& q_in, const ad::NodePtr& k_in,
                                 const ad::NodePtr& v_in, const ad::Matrix& allow,
                                 const ad::NodePtr& theta_raw,
                                 const ad::Matrix* dist,
                                 const AttentionOptions& opts);

/// Pre-norm-free transformer block: attention + residual + layer norm, then
/// a ReLU feed-forward + residual + layer norm. The residual stream is the
/// query input.
struct TransformerBlock {
  MultiHeadAttention attn;
  ad::NodePtr theta_raw;  // n_heads x 1; null = no monotonic decay
  ad::NodePtr w1, b1, w2, b2;
  ad::NodePtr ln1_g, ln1_b, ln2_g, ln2_b;

  static TransformerBlock create(int d_model, int n_heads, int ffn_hidden,
                                 bool monotonic, std::mt19937_64& rng);
  void collect(ParamList& out, const std::string& prefix) const;

  ad::NodePtr apply(ad::Tape& t, const ad::NodePtr& q_in, const ad::NodePtr& k_in,
                    const ad::NodePtr& v_in, const ad::Matrix& allow,
                    const ad::Matrix* dist, const AttentionOptions& opts) const;
};

}  // namespace kt
