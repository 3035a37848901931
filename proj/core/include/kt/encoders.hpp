#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "kt/autodiff.hpp"
#include "kt/expand.hpp"

namespace kt {

struct Param {
  std::string name;
  ad::NodePtr node;
};
using ParamList = std::vector<Param>;

std::int64_t param_count(const ParamList& params);

/// Uniform in [-1/sqrt(cols), +1/sqrt(cols)]; keeps initial logits small.
ad::Matrix init_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);
ad::Matrix init_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                       double mean = 0.0, double sd = 1.0);

/// KC table plus response vectors g_0, g_1 (and g_MASK when the mask label is
/// active), combined as e_(c,r) = e_c + g_r. The response vectors live in the
/// rows of `resp`, indexed by InputLabel, so enabling the mask label adds
/// exactly one d-sized row.
struct SeparateEmbedding {
  ad::NodePtr kc;    // |C| x d
  ad::NodePtr resp;  // 2 x d, or 3 x d with mask
  bool has_mask = false;

  static SeparateEmbedding create(int n_kcs, int dim, bool with_mask,
                                  std::mt19937_64& rng);
  void collect(ParamList& out, const std::string& prefix) const;

  /// e_(c,label) rows for a step sequence. Throws ConfigError (UnknownLabel)
  /// if a Mask label arrives while the mask row is absent.
  ad::NodePtr rows(ad::Tape& t, const std::vector<KcId>& kcs,
                   const std::vector<InputLabel>& labels) const;
  /// Single (kc, label) pair as a 1 x d row.
  ad::NodePtr embed(ad::Tape& t, KcId kc_id, InputLabel label) const;

  /// Averaged embedding over a question's KC list, one row per step:
  /// mean over c in m(q) of e_(c,label). flat/offsets follow the
  /// gather_rows_mean segment layout.
  ad::NodePtr fused_rows(ad::Tape& t, const std::vector<std::int32_t>& flat_kcs,
                         const std::vector<std::int32_t>& offsets,
                         const std::vector<InputLabel>& labels) const;
  /// Single fused question as a 1 x d row.
  ad::NodePtr embed_fuse(ad::Tape& t, const std::vector<KcId>& kcs,
                         InputLabel label) const;
};

/// One table entry per (KC, input label): 2|C| x d, or 3|C| x d with mask.
/// Lookup index = label * |C| + kc.
struct CombinedEmbedding {
  ad::NodePtr table;
  int n_kcs = 0;
  bool has_mask = false;

  static CombinedEmbedding create(int n_kcs, int dim, bool with_mask,
                                  std::mt19937_64& rng);
  void collect(ParamList& out, const std::string& prefix) const;

  ad::NodePtr rows(ad::Tape& t, const std::vector<KcId>& kcs,
                   const std::vector<InputLabel>& labels) const;
};

/// Difficulty-scaled variation embeddings:
///   e_(q,c)   = e_c + mu_q * d_c
///   e_(r,c,q) = e_(c,r) + mu_q * f_(c,r)
/// The difficulty scalar mu_q is shared between the two forms; f rows are
/// indexed like a combined table (label * |C| + kc) and gain a MASK block
/// when the mask label is active.
struct RaschEmbedding {
  SeparateEmbedding base;
  ad::NodePtr mu;         // |Q| x 1, zero-initialized
  ad::NodePtr variation;  // |C| x d (d_c)
  ad::NodePtr f;          // (2 or 3)|C| x d

  static RaschEmbedding create(int n_questions, int n_kcs, int dim, bool with_mask,
                               std::mt19937_64& rng);
  void collect(ParamList& out, const std::string& prefix) const;

  ad::NodePtr question_rows(ad::Tape& t, const std::vector<QuestionId>& questions,
                            const std::vector<KcId>& kcs) const;
  ad::NodePtr knowledge_rows(ad::Tape& t, const std::vector<QuestionId>& questions,
                             const std::vector<KcId>& kcs,
                             const std::vector<InputLabel>& labels) const;
};

enum class RecencyMode { kNone, kLearnable, kFixed };

/// Fourier-feature encoding of the step distance since a KC's last
/// occurrence:
///   gamma(d) = [cos(d*w_f + b_f), sin(d*w_f + b_f)]
///   DE(d)    = gelu(gamma(d) * W_h + b_h) * W_p + b_p
/// Learnable mode draws w_f, b_f from N(0,1); fixed mode freezes the
/// frequency bands at w_f[k] = 2^k * pi with zero phase.
struct RecencyEncoder {
  ad::NodePtr w_f, b_f;  // 1 x D/2
  ad::NodePtr w_h, b_h;  // D x D, 1 x D
  ad::NodePtr w_p, b_p;  // D x D', 1 x D'
  RecencyMode mode = RecencyMode::kLearnable;

  static RecencyEncoder create(int fourier_dim, int out_dim, RecencyMode mode,
                               std::mt19937_64& rng);
  void collect(ParamList& out, const std::string& prefix) const;

  /// DE(d) rows for a distance sequence (cast to double).
  ad::NodePtr encode(ad::Tape& t, const std::vector<std::int32_t>& distances) const;
  /// Same, from an arbitrary T x 1 node (lets tests differentiate w.r.t. d).
  ad::NodePtr encode_node(ad::Tape& t, const ad::NodePtr& d_col) const;
  /// The raw Fourier features gamma(d) = [cos(..), sin(..)], T x D.
  ad::NodePtr gamma(ad::Tape& t, const ad::NodePtr& d_col) const;
};

/// Learned absolute-position table, n x d.
struct PositionalEmbedding {
  ad::NodePtr table;

  static PositionalEmbedding create(int max_len, int dim, std::mt19937_64& rng);
  void collect(ParamList& out, const std::string& prefix) const;

  /// Rows t0 .. t0+n-1. Throws ShapeError (PositionOutOfRange) past the table.
  ad::NodePtr encode(ad::Tape& t, std::int32_t t0, std::int32_t n) const;
};

}  // namespace kt
