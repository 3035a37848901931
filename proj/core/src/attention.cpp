#include "kt/attention.hpp"

#include <cmath>

#include "kt/errors.hpp"

namespace kt {

ad::Matrix causal_mask(int len, bool strict) {
  ad::Matrix m = ad::Matrix::Zero(len, len);
  for (int i = 0; i < len; ++i) {
    for (int j = 0; j < (strict ? i : i + 1); ++j) m(i, j) = 1.0;
  }
  return m;
}

ad::Matrix horizon_mask(const std::vector<std::int32_t>& horizon) {
  const int len = static_cast<int>(horizon.size());
  ad::Matrix m = ad::Matrix::Zero(len, len);
  for (int i = 0; i < len; ++i) {
    for (int j = 0; j < len && j < horizon[i]; ++j) m(i, j) = 1.0;
  }
  return m;
}

ad::Matrix question_mask(const std::vector<std::int32_t>& block_ids,
                         const std::vector<std::int32_t>& horizon) {
  const int len = static_cast<int>(block_ids.size());
  ad::Matrix m = ad::Matrix::Zero(len, len);
  for (int i = 0; i < len; ++i) {
    for (int j = 0; j < len && j < horizon[i]; ++j) {
      if (block_ids[j] != block_ids[i]) m(i, j) = 1.0;
    }
  }
  return m;
}

ad::Matrix index_distances(int len) {
  ad::Matrix m(len, len);
  for (int i = 0; i < len; ++i) {
    for (int j = 0; j < len; ++j) m(i, j) = std::abs(i - j);
  }
  return m;
}

MultiHeadAttention MultiHeadAttention::create(int d_model, int n_heads,
                                              std::mt19937_64& rng) {
  MultiHeadAttention p;
  p.wq = ad::leaf(init_uniform(d_model, d_model, rng));
  p.wk = ad::leaf(init_uniform(d_model, d_model, rng));
  p.wv = ad::leaf(init_uniform(d_model, d_model, rng));
  p.wo = ad::leaf(init_uniform(d_model, d_model, rng));
  p.n_heads = n_heads;
  return p;
}

void MultiHeadAttention::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".wq", wq});
  out.push_back({prefix + ".wk", wk});
  out.push_back({prefix + ".wv", wv});
  out.push_back({prefix + ".wo", wo});
}

ad::NodePtr multi_head_attention(ad::Tape& t, const MultiHeadAttention& p,
                                 const ad::NodePtr& q_in, const ad::NodePtr& k_in,
                                 const ad::NodePtr& v_in, const ad::Matrix& allow,
                                 const ad::NodePtr& theta_raw,
                                 const ad::Matrix* dist,
                                 const AttentionOptions& opts) {
  const Eigen::Index d_model = p.wq->cols();
  if (d_model % p.n_heads != 0) throw ShapeError("heads must divide d_model");
  const Eigen::Index dh = d_model / p.n_heads;

  auto q = ad::matmul(t, q_in, p.wq);
  auto k = ad::matmul(t, k_in, p.wk);
  auto v = ad::matmul(t, v_in, p.wv);

  std::vector<ad::NodePtr> heads;
  heads.reserve(p.n_heads);
  for (int h = 0; h < p.n_heads; ++h) {
    auto qh = ad::slice_cols(t, q, h * dh, dh);
    auto kh = ad::slice_cols(t, k, h * dh, dh);
    auto vh = ad::slice_cols(t, v, h * dh, dh);
    auto scores = ad::scale(t, ad::matmul(t, qh, ad::transpose(t, kh)),
                            1.0 / std::sqrt(static_cast<double>(dh)));
    if (theta_raw != nullptr) {
      if (dist == nullptr) throw ShapeError("monotonic attention needs distances");
      auto theta = ad::softplus(t, ad::slice_rows(t, theta_raw, h, 1));
      auto decay = ad::exp_(t, ad::scalar_times(t, theta, *dist, -1.0));
      scores = ad::cmul(t, scores, decay);
    }
    auto weights = ad::masked_softmax(t, scores, allow);
    if (opts.record_weights != nullptr) {
      opts.record_weights->push_back(weights->value);
    }
    if (opts.training && opts.dropout > 0.0) {
      weights = ad::dropout(t, weights, opts.dropout, *opts.rng);
    }
    heads.push_back(ad::matmul(t, weights, vh));
  }
  return ad::matmul(t, ad::concat_cols(t, heads), p.wo);
}

TransformerBlock TransformerBlock::create(int d_model, int n_heads, int ffn_hidden,
                                          bool monotonic, std::mt19937_64& rng) {
  TransformerBlock b;
  b.attn = MultiHeadAttention::create(d_model, n_heads, rng);
  if (monotonic) {
    // softplus(0.5413) ~= 1, a moderate initial decay rate for every head
    b.theta_raw = ad::leaf(ad::Matrix::Constant(n_heads, 1, 0.5413));
  }
  b.w1 = ad::leaf(init_uniform(d_model, ffn_hidden, rng));
  b.b1 = ad::leaf(ad::Matrix::Zero(1, ffn_hidden));
  b.w2 = ad::leaf(init_uniform(ffn_hidden, d_model, rng));
  b.b2 = ad::leaf(ad::Matrix::Zero(1, d_model));
  b.ln1_g = ad::leaf(ad::Matrix::Ones(1, d_model));
  b.ln1_b = ad::leaf(ad::Matrix::Zero(1, d_model));
  b.ln2_g = ad::leaf(ad::Matrix::Ones(1, d_model));
  b.ln2_b = ad::leaf(ad::Matrix::Zero(1, d_model));
  return b;
}

void TransformerBlock::collect(ParamList& out, const std::string& prefix) const {
  attn.collect(out, prefix + ".attn");
  if (theta_raw) out.push_back({prefix + ".attn.theta", theta_raw});
  out.push_back({prefix + ".ffn.w1", w1});
  out.push_back({prefix + ".ffn.b1", b1});
  out.push_back({prefix + ".ffn.w2", w2});
  out.push_back({prefix + ".ffn.b2", b2});
  out.push_back({prefix + ".ln1.g", ln1_g});
  out.push_back({prefix + ".ln1.b", ln1_b});
  out.push_back({prefix + ".ln2.g", ln2_g});
  out.push_back({prefix + ".ln2.b", ln2_b});
}

ad::NodePtr TransformerBlock::apply(ad::Tape& t, const ad::NodePtr& q_in,
                                    const ad::NodePtr& k_in, const ad::NodePtr& v_in,
                                    const ad::Matrix& allow, const ad::Matrix* dist,
                                    const AttentionOptions& opts) const {
  auto a = multi_head_attention(t, attn, q_in, k_in, v_in, allow, theta_raw, dist, opts);
  auto x = ad::layer_norm(t, ad::add(t, q_in, a), ln1_g, ln1_b);
  auto hidden = ad::relu(t, ad::linear(t, x, w1, b1));
  if (opts.training && opts.dropout > 0.0) {
    hidden = ad::dropout(t, hidden, opts.dropout, *opts.rng);
  }
  auto f = ad::linear(t, hidden, w2, b2);
  return ad::layer_norm(t, ad::add(t, x, f), ln2_g, ln2_b);
}

}  // namespace kt
