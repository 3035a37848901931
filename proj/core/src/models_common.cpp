#include <numeric>

#include "kt/errors.hpp"
#include "kt/models.hpp"

namespace kt {

std::vector<std::int32_t> RowView::horizon(bool question_start) const {
  std::vector<std::int32_t> h(len);
  if (question_start) {
    for (int t = 0; t < len; ++t) h[t] = block_start[t];
  } else {
    std::iota(h.begin(), h.end(), 0);
  }
  return h;
}

RowView extract_row(const BatchInput& batch, int row) {
  RowView v;
  v.len = batch.len(row);
  v.kc.reserve(v.len);
  for (int t = 0; t < v.len; ++t) {
    const auto i = batch.at(row, t);
    v.kc.push_back(batch.kc[i]);
    v.question.push_back(batch.question[i]);
    v.label.push_back(static_cast<InputLabel>(batch.input_label[i]));
    v.recency.push_back(batch.recency[i]);
    v.target.push_back(static_cast<double>(batch.target[i]));
    v.block_id.push_back(batch.block_id[i]);
    v.block_start.push_back(batch.block_start[i]);
  }
  if (batch.fused) {
    for (int t = 0; t < v.len; ++t) {
      const auto i = batch.at(row, t);
      v.fused_offsets.push_back(static_cast<std::int32_t>(v.fused_kcs.size()));
      for (std::int32_t k = batch.fused_offsets[i]; k < batch.fused_offsets[i + 1];
           ++k) {
        v.fused_kcs.push_back(batch.fused_kcs[k]);
      }
    }
    v.fused_offsets.push_back(static_cast<std::int32_t>(v.fused_kcs.size()));
  }
  return v;
}

std::unique_ptr<Model> make_dkt_model(const ModelConfig& config, std::uint64_t seed);
std::unique_ptr<Model> make_sakt_model(const ModelConfig& config, std::uint64_t seed);
std::unique_ptr<Model> make_akt_model(const ModelConfig& config, std::uint64_t seed);

std::unique_ptr<Model> make_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  switch (config.family) {
    case ModelFamily::kDkt:
    case ModelFamily::kDktPlus:
      return make_dkt_model(config, seed);
    case ModelFamily::kSakt:
      return make_sakt_model(config, seed);
    case ModelFamily::kAkt:
      return make_akt_model(config, seed);
  }
  throw ConfigError("unreachable model family");
}

}  // namespace kt
