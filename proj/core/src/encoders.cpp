#include "kt/encoders.hpp"

#include <cmath>

#include "kt/errors.hpp"

namespace kt {

std::int64_t param_count(const ParamList& params) {
  std::int64_t n = 0;
  for (const auto& p : params) n += p.node->value.size();
  return n;
}

ad::Matrix init_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  ad::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

ad::Matrix init_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                       double mean, double sd) {
  std::normal_distribution<double> dist(mean, sd);
  ad::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

namespace {

std::vector<std::int32_t> label_indices(const std::vector<InputLabel>& labels,
                                        bool has_mask, int n_kcs,
                                        const std::vector<KcId>* kcs) {
  std::vector<std::int32_t> idx(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int l = static_cast<int>(labels[i]);
    if (labels[i] == InputLabel::kAutoFill) {
      throw ConfigError("AutoFill labels must be resolved by the model before embedding");
    }
    if (labels[i] == InputLabel::kMask && !has_mask) {
      throw ConfigError("UnknownLabel: MASK requested without the mask-label variant");
    }
    idx[i] = kcs ? static_cast<std::int32_t>(l * n_kcs + (*kcs)[i])
                 : static_cast<std::int32_t>(l);
  }
  return idx;
}

}  // namespace

SeparateEmbedding SeparateEmbedding::create(int n_kcs, int dim, bool with_mask,
                                            std::mt19937_64& rng) {
  SeparateEmbedding e;
  e.kc = ad::leaf(init_uniform(n_kcs, dim, rng));
  e.resp = ad::leaf(init_uniform(with_mask ? 3 : 2, dim, rng));
  e.has_mask = with_mask;
  return e;
}

void SeparateEmbedding::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".kc", kc});
  out.push_back({prefix + ".resp", resp});
}

ad::NodePtr SeparateEmbedding::rows(ad::Tape& t, const std::vector<KcId>& kcs,
                                    const std::vector<InputLabel>& labels) const {
  const auto resp_idx = label_indices(labels, has_mask, 0, nullptr);
  return ad::add(t, ad::gather_rows(t, kc, kcs),
                 ad::gather_rows(t, resp, resp_idx));
}

ad::NodePtr SeparateEmbedding::embed(ad::Tape& t, KcId kc_id, InputLabel label) const {
  return rows(t, {kc_id}, {label});
}

ad::NodePtr SeparateEmbedding::fused_rows(ad::Tape& t,
                                          const std::vector<std::int32_t>& flat_kcs,
                                          const std::vector<std::int32_t>& offsets,
                                          const std::vector<InputLabel>& labels) const {
  const auto resp_idx = label_indices(labels, has_mask, 0, nullptr);
  return ad::add(t, ad::gather_rows_mean(t, kc, flat_kcs, offsets),
                 ad::gather_rows(t, resp, resp_idx));
}

ad::NodePtr SeparateEmbedding::embed_fuse(ad::Tape& t, const std::vector<KcId>& kcs,
                                          InputLabel label) const {
  const std::vector<std::int32_t> offsets = {0,
                                             static_cast<std::int32_t>(kcs.size())};
  return fused_rows(t, kcs, offsets, {label});
}

CombinedEmbedding CombinedEmbedding::create(int n_kcs, int dim, bool with_mask,
                                            std::mt19937_64& rng) {
  CombinedEmbedding e;
  e.table = ad::leaf(init_uniform((with_mask ? 3 : 2) * n_kcs, dim, rng));
  e.n_kcs = n_kcs;
  e.has_mask = with_mask;
  return e;
}

void CombinedEmbedding::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".table", table});
}

ad::NodePtr CombinedEmbedding::rows(ad::Tape& t, const std::vector<KcId>& kcs,
                                    const std::vector<InputLabel>& labels) const {
  return ad::gather_rows(t, table, label_indices(labels, has_mask, n_kcs, &kcs));
}

RaschEmbedding RaschEmbedding::create(int n_questions, int n_kcs, int dim,
                                      bool with_mask, std::mt19937_64& rng) {
  RaschEmbedding e;
  e.base = SeparateEmbedding::create(n_kcs, dim, with_mask, rng);
  e.mu = ad::leaf(ad::Matrix::Zero(n_questions, 1));
  e.variation = ad::leaf(init_uniform(n_kcs, dim, rng));
  e.f = ad::leaf(init_uniform((with_mask ? 3 : 2) * n_kcs, dim, rng));
  return e;
}

void RaschEmbedding::collect(ParamList& out, const std::string& prefix) const {
  base.collect(out, prefix);
  out.push_back({prefix + ".mu", mu});
  out.push_back({prefix + ".variation", variation});
  out.push_back({prefix + ".f", f});
}

ad::NodePtr RaschEmbedding::question_rows(ad::Tape& t,
                                          const std::vector<QuestionId>& questions,
                                          const std::vector<KcId>& kcs) const {
  auto mu_rows = ad::gather_rows(t, mu, questions);  // T x 1
  auto var_rows = ad::gather_rows(t, variation, kcs);
  return ad::add(t, ad::gather_rows(t, base.kc, kcs),
                 ad::rowwise_scale(t, var_rows, mu_rows));
}

ad::NodePtr RaschEmbedding::knowledge_rows(ad::Tape& t,
                                           const std::vector<QuestionId>& questions,
                                           const std::vector<KcId>& kcs,
                                           const std::vector<InputLabel>& labels) const {
  const auto f_idx = label_indices(labels, base.has_mask, base.kc->rows(), &kcs);
  auto mu_rows = ad::gather_rows(t, mu, questions);
  auto f_rows = ad::gather_rows(t, f, f_idx);
  return ad::add(t, base.rows(t, kcs, labels),
                 ad::rowwise_scale(t, f_rows, mu_rows));
}

RecencyEncoder RecencyEncoder::create(int fourier_dim, int out_dim, RecencyMode mode,
                                      std::mt19937_64& rng) {
  if (fourier_dim % 2 != 0) {
    throw ConfigError("recency fourier dimension must be even");
  }
  RecencyEncoder e;
  e.mode = mode;
  const int half = fourier_dim / 2;
  if (mode == RecencyMode::kFixed) {
    ad::Matrix freq(1, half);
    for (int k = 0; k < half; ++k) freq(0, k) = std::pow(2.0, k) * M_PI;
    e.w_f = ad::leaf(std::move(freq), /*requires_grad=*/false);
    e.b_f = ad::leaf(ad::Matrix::Zero(1, half), /*requires_grad=*/false);
  } else {
    e.w_f = ad::leaf(init_normal(1, half, rng));
    e.b_f = ad::leaf(init_normal(1, half, rng));
  }
  e.w_h = ad::leaf(init_uniform(fourier_dim, fourier_dim, rng));
  e.b_h = ad::leaf(ad::Matrix::Zero(1, fourier_dim));
  e.w_p = ad::leaf(init_uniform(fourier_dim, out_dim, rng));
  e.b_p = ad::leaf(ad::Matrix::Zero(1, out_dim));
  return e;
}

void RecencyEncoder::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".w_f", w_f});
  out.push_back({prefix + ".b_f", b_f});
  out.push_back({prefix + ".w_h", w_h});
  out.push_back({prefix + ".b_h", b_h});
  out.push_back({prefix + ".w_p", w_p});
  out.push_back({prefix + ".b_p", b_p});
}

ad::NodePtr RecencyEncoder::encode(ad::Tape& t,
                                   const std::vector<std::int32_t>& distances) const {
  ad::Matrix d(static_cast<Eigen::Index>(distances.size()), 1);
  for (std::size_t i = 0; i < distances.size(); ++i) {
    d(static_cast<Eigen::Index>(i), 0) = static_cast<double>(distances[i]);
  }
  return encode_node(t, ad::constant(std::move(d)));
}

ad::NodePtr RecencyEncoder::gamma(ad::Tape& t, const ad::NodePtr& d_col) const {
  auto phase = ad::add_rowvec(t, ad::matmul(t, d_col, w_f), b_f);  // T x D/2
  return ad::concat_cols(t, {ad::cos_(t, phase), ad::sin_(t, phase)});
}

ad::NodePtr RecencyEncoder::encode_node(ad::Tape& t, const ad::NodePtr& d_col) const {
  auto hidden = ad::gelu(t, ad::linear(t, gamma(t, d_col), w_h, b_h));
  return ad::linear(t, hidden, w_p, b_p);
}

PositionalEmbedding PositionalEmbedding::create(int max_len, int dim,
                                                std::mt19937_64& rng) {
  PositionalEmbedding e;
  e.table = ad::leaf(init_uniform(max_len, dim, rng));
  return e;
}

void PositionalEmbedding::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".table", table});
}

ad::NodePtr PositionalEmbedding::encode(ad::Tape& t, std::int32_t t0,
                                        std::int32_t n) const {
  if (t0 < 0 || t0 + n > table->rows()) {
    throw ShapeError("PositionOutOfRange: steps " + std::to_string(t0) + ".." +
                     std::to_string(t0 + n - 1) + " exceed positional table of " +
                     std::to_string(table->rows()));
  }
  return ad::slice_rows(t, table, t0, n);
}

}  // namespace kt
