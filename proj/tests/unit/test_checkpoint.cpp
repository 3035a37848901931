#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "kt/checkpoint.hpp"
#include "kt/errors.hpp"
#include "kt/eval.hpp"
#include "support/oracles.hpp"

using namespace kt;

TEST_CASE("checkpoint: config and parameters survive the round trip") {
  std::mt19937_64 rng(5);
  const auto log = oracle::random_log(rng, 3, 10, 3, 8);
  ModelConfig cfg;
  cfg.family = ModelFamily::kAkt;
  cfg.flags.ml = true;
  cfg.flags.recency = RecencyMode::kLearnable;
  cfg.dims.d_model = 16;
  cfg.dims.n_heads = 4;
  cfg.dims.n_layers = 1;
  cfg.dims.dropout = 0.0;
  cfg.n_questions = log.n_questions;
  cfg.n_kcs = log.n_kcs;

  auto model = make_model(cfg, 99);
  const auto path = (std::filesystem::temp_directory_path() /
                     ("kt_ckpt_" + std::to_string(::getpid()) + ".bin"))
                        .string();
  save_checkpoint(path, *model);

  auto loaded = load_model(path);
  CHECK(loaded->config().family == cfg.family);
  CHECK(loaded->config().flags.ml);
  CHECK(loaded->config().flags.recency == RecencyMode::kLearnable);
  REQUIRE(loaded->params().size() == model->params().size());

  // Tensors are stored as float32: equality after the same cast.
  for (std::size_t i = 0; i < model->params().size(); ++i) {
    const auto& a = model->params()[i].node->value;
    const auto& b = loaded->params()[i].node->value;
    REQUIRE(a.rows() == b.rows());
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      for (Eigen::Index c = 0; c < a.cols(); ++c) {
        CHECK(static_cast<double>(static_cast<float>(a(r, c))) == b(r, c));
      }
    }
  }

  // Predictions from the reloaded model track the original closely.
  const auto pa = predict_steps(*model, log, Protocol::kOneByOne);
  const auto pb = predict_steps(*loaded, log, Protocol::kOneByOne);
  for (std::size_t s = 0; s < pa.size(); ++s) {
    for (std::size_t i = 0; i < pa[s].size(); ++i) {
      CHECK(pa[s][i] == doctest::Approx(pb[s][i]).epsilon(1e-5));
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint: rejects garbage files") {
  const auto path = (std::filesystem::temp_directory_path() /
                     ("kt_bad_" + std::to_string(::getpid()) + ".bin"))
                        .string();
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("not a checkpoint at all", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(read_checkpoint(path), DataError);
  std::filesystem::remove(path);
}
