#include "kt/model_config.hpp"

#include <nlohmann/json.hpp>

#include "kt/errors.hpp"

namespace kt {

std::string to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::kDkt: return "dkt";
    case ModelFamily::kDktPlus: return "dkt+";
    case ModelFamily::kSakt: return "sakt";
    case ModelFamily::kAkt: return "akt";
  }
  return "?";
}

ModelFamily family_from_string(const std::string& s) {
  if (s == "dkt") return ModelFamily::kDkt;
  if (s == "dkt+" || s == "dkt_plus" || s == "dktplus") return ModelFamily::kDktPlus;
  if (s == "sakt") return ModelFamily::kSakt;
  if (s == "akt") return ModelFamily::kAkt;
  throw ConfigError("unknown model family '" + s + "'");
}

void ModelConfig::validate() const {
  const bool attention = family == ModelFamily::kSakt || family == ModelFamily::kAkt;
  if (n_questions < 1 || n_kcs < 1) {
    throw ConfigError("model needs non-empty question and KC vocabularies");
  }
  if (dims.d_model < 1 || dims.n_layers < 1) {
    throw ConfigError("d_model and n_layers must be positive");
  }
  if (attention && (dims.n_heads < 1 || dims.d_model % dims.n_heads != 0)) {
    throw ConfigError("n_heads must divide d_model");
  }
  if (flags.ad && family != ModelFamily::kDkt) {
    throw ConfigError("autoregressive decoding is DKT-only");
  }
  if (flags.qm && family != ModelFamily::kAkt) {
    throw ConfigError("question-level masking is AKT-only");
  }
  if (flags.qm && (flags.ml || flags.ad || flags.fuse)) {
    throw ConfigError("qm replaces the input-label policy; combine with none");
  }
  if (flags.fuse && family != ModelFamily::kDkt && family != ModelFamily::kAkt) {
    throw ConfigError("fused embeddings exist for DKT and AKT only");
  }
  if (flags.fuse && (flags.ml || flags.ad)) {
    throw ConfigError("fuse does not expand; ml/ad have no effect");
  }
  if (flags.fuse && flags.recency != RecencyMode::kNone) {
    throw ConfigError("recency is per-KC and undefined for fused questions");
  }
  if (flags.ml && flags.ad) {
    throw ConfigError("ml and ad are alternative label policies");
  }
  if (flags.soft_ad && !flags.ad) {
    throw ConfigError("soft_ad requires ad");
  }
  if (dims.dropout < 0.0 || dims.dropout >= 1.0) {
    throw ConfigError("dropout must be in [0, 1)");
  }
}

MaskPolicy ModelConfig::mask_policy() const {
  if (flags.fuse) return MaskPolicy::kFuseOnly;
  if (flags.ad) return MaskPolicy::kAutoregressive;
  if (flags.ml) return MaskPolicy::kMaskLabel;
  return MaskPolicy::kNone;
}

std::string ModelConfig::to_json() const {
  nlohmann::json j;
  j["family"] = to_string(family);
  j["flags"]["ml"] = flags.ml;
  j["flags"]["ad"] = flags.ad;
  j["flags"]["fuse"] = flags.fuse;
  j["flags"]["qm"] = flags.qm;
  j["flags"]["soft_ad"] = flags.soft_ad;
  j["flags"]["recency"] = flags.recency == RecencyMode::kNone        ? "none"
                          : flags.recency == RecencyMode::kLearnable ? "learnable"
                                                                     : "fixed";
  j["dims"]["d_model"] = dims.d_model;
  j["dims"]["n_heads"] = dims.n_heads;
  j["dims"]["n_layers"] = dims.n_layers;
  j["dims"]["dropout"] = dims.dropout;
  j["dims"]["max_seq_len"] = dims.max_seq_len;
  j["n_questions"] = n_questions;
  j["n_kcs"] = n_kcs;
  return j.dump(2);
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  ModelConfig c;
  c.family = family_from_string(j.at("family").get<std::string>());
  const auto& f = j.at("flags");
  c.flags.ml = f.value("ml", false);
  c.flags.ad = f.value("ad", false);
  c.flags.fuse = f.value("fuse", false);
  c.flags.qm = f.value("qm", false);
  c.flags.soft_ad = f.value("soft_ad", false);
  const std::string rec = f.value("recency", "none");
  c.flags.recency = rec == "none"        ? RecencyMode::kNone
                    : rec == "learnable" ? RecencyMode::kLearnable
                    : rec == "fixed"     ? RecencyMode::kFixed
                                         : throw ConfigError("bad recency mode '" + rec + "'");
  const auto& d = j.at("dims");
  c.dims.d_model = d.value("d_model", 256);
  c.dims.n_heads = d.value("n_heads", 8);
  c.dims.n_layers = d.value("n_layers", 2);
  c.dims.dropout = d.value("dropout", 0.05);
  c.dims.max_seq_len = d.value("max_seq_len", 0);
  c.n_questions = j.at("n_questions").get<int>();
  c.n_kcs = j.at("n_kcs").get<int>();
  return c;
}

}  // namespace kt
