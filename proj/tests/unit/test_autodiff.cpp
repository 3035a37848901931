#include <doctest.h>

#include <cmath>
#include <random>

#include "kt/attention.hpp"
#include "kt/autodiff.hpp"
#include "kt/errors.hpp"
#include "support/oracles.hpp"

using namespace kt;
using ad::Matrix;
using ad::NodePtr;

namespace {

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c,
                     double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = d(rng);
  return m;
}

/// FD-checks the gradients of a scalar expression w.r.t. the given leaves.
template <typename Builder>
void check_expr(const ParamList& leaves, Builder build, double tol = 1e-6,
                double h = 1e-5) {
  auto loss_value = [&]() {
    ad::Tape t;
    return build(t)->value(0, 0);
  };
  for (const auto& p : leaves) p.node->zero_grad();
  ad::Tape t;
  auto loss = build(t);
  t.backward(loss);
  const auto res = oracle::finite_difference_check(leaves, loss_value, h);
  INFO("worst: " << res.worst_param << " analytic=" << res.analytic
                 << " numeric=" << res.numeric);
  CHECK(res.max_rel_err < tol);
}

}  // namespace

TEST_CASE("autodiff: elementwise and matmul gradients") {
  std::mt19937_64 rng(1);
  auto a = ad::leaf(random_matrix(rng, 4, 3));
  auto b = ad::leaf(random_matrix(rng, 4, 3));
  auto w = ad::leaf(random_matrix(rng, 3, 5));
  auto row = ad::leaf(random_matrix(rng, 1, 5));
  auto col = ad::leaf(random_matrix(rng, 4, 1));
  const Matrix weight = random_matrix(rng, 4, 5);
  ParamList leaves = {{"a", a}, {"b", b}, {"w", w}, {"row", row}, {"col", col}};

  check_expr(leaves, [&](ad::Tape& t) {
    auto x = ad::cmul(t, ad::add(t, a, b), ad::sub(t, a, ad::scale(t, b, 0.7)));
    auto y = ad::add_rowvec(t, ad::matmul(t, x, w), row);
    auto z = ad::rowwise_scale(t, y, col);
    return ad::sum_all(t, ad::cmul(t, z, ad::constant(weight)));
  });
}

TEST_CASE("autodiff: nonlinearity gradients") {
  std::mt19937_64 rng(2);
  auto a = ad::leaf(random_matrix(rng, 5, 4));
  const Matrix weight = random_matrix(rng, 5, 4);
  ParamList leaves = {{"a", a}};

  auto weighted = [&](ad::Tape& t, NodePtr x) {
    return ad::sum_all(t, ad::cmul(t, x, ad::constant(weight)));
  };
  check_expr(leaves, [&](ad::Tape& t) { return weighted(t, ad::sigmoid(t, a)); });
  check_expr(leaves, [&](ad::Tape& t) { return weighted(t, ad::tanh_(t, a)); });
  check_expr(leaves, [&](ad::Tape& t) { return weighted(t, ad::gelu(t, a)); });
  check_expr(leaves, [&](ad::Tape& t) { return weighted(t, ad::softplus(t, a)); });
  check_expr(leaves, [&](ad::Tape& t) { return weighted(t, ad::exp_(t, a)); });
  check_expr(leaves, [&](ad::Tape& t) { return weighted(t, ad::cos_(t, a)); });
  check_expr(leaves, [&](ad::Tape& t) { return weighted(t, ad::sin_(t, a)); });
  check_expr(leaves, [&](ad::Tape& t) { return weighted(t, ad::square(t, a)); });

  // Keep values away from the relu/abs kink before differencing.
  a->value = a->value.unaryExpr(
      [](double x) { return x + (x >= 0 ? 0.5 : -0.5); });
  check_expr(leaves, [&](ad::Tape& t) { return weighted(t, ad::relu(t, a)); });
  check_expr(leaves, [&](ad::Tape& t) { return weighted(t, ad::abs_(t, a)); });
}

TEST_CASE("autodiff: shape op gradients") {
  std::mt19937_64 rng(3);
  auto a = ad::leaf(random_matrix(rng, 6, 4));
  auto b = ad::leaf(random_matrix(rng, 2, 4));
  const Matrix w1 = random_matrix(rng, 8, 4);
  const Matrix w2 = random_matrix(rng, 3, 4);
  ParamList leaves = {{"a", a}, {"b", b}};

  check_expr(leaves, [&](ad::Tape& t) {
    auto stacked = ad::vstack(t, {a, b});
    return ad::sum_all(t, ad::cmul(t, stacked, ad::constant(w1)));
  });
  check_expr(leaves, [&](ad::Tape& t) {
    auto sliced = ad::slice_rows(t, a, 1, 3);
    auto cols = ad::concat_cols(t, {ad::slice_cols(t, sliced, 2, 2),
                                    ad::slice_cols(t, sliced, 0, 2)});
    auto round_trip = ad::transpose(t, ad::transpose(t, cols));
    return ad::sum_all(t, ad::cmul(t, round_trip, ad::constant(w2)));
  });
}

TEST_CASE("autodiff: gather gradients") {
  std::mt19937_64 rng(4);
  auto table = ad::leaf(random_matrix(rng, 7, 3));
  const std::vector<std::int32_t> idx = {2, 2, 0, 6, 1};
  const std::vector<std::int32_t> flat = {0, 1, 2, 2, 5, 6};
  const std::vector<std::int32_t> offsets = {0, 2, 4, 6};
  const Matrix w5 = random_matrix(rng, 5, 3);
  const Matrix w3 = random_matrix(rng, 3, 3);
  const Matrix w31 = random_matrix(rng, 3, 1);
  const Matrix w21 = random_matrix(rng, 2, 1);
  ParamList leaves = {{"table", table}};

  check_expr(leaves, [&](ad::Tape& t) {
    return ad::sum_all(
        t, ad::cmul(t, ad::gather_rows(t, table, idx), ad::constant(w5)));
  });
  check_expr(leaves, [&](ad::Tape& t) {
    return ad::sum_all(t, ad::cmul(t, ad::gather_rows_mean(t, table, flat, offsets),
                                   ad::constant(w3)));
  });
  check_expr(leaves, [&](ad::Tape& t) {
    auto picked = ad::gather_rc(t, table, {0, 3, 3}, {1, 0, 2});
    return ad::sum_all(t, ad::cmul(t, picked, ad::constant(w31)));
  });
  check_expr(leaves, [&](ad::Tape& t) {
    auto m = ad::gather_rc_mean(t, table, {0, 1, 2, 4}, {0, 1, 1, 2}, {0, 2, 4});
    return ad::sum_all(t, ad::cmul(t, m, ad::constant(w21)));
  });
}

TEST_CASE("autodiff: monotonic decay and masked softmax gradients") {
  std::mt19937_64 rng(5);
  auto theta = ad::leaf(random_matrix(rng, 1, 1));
  auto scores = ad::leaf(random_matrix(rng, 4, 4));
  const Matrix dist = index_distances(4);
  Matrix allow = causal_mask(4, /*strict=*/true);  // row 0 fully denied
  const Matrix w = random_matrix(rng, 4, 4);
  ParamList leaves = {{"theta", theta}, {"scores", scores}};

  check_expr(leaves, [&](ad::Tape& t) {
    auto decay = ad::exp_(t, ad::scalar_times(t, ad::softplus(t, theta), dist, -1.0));
    auto weights = ad::masked_softmax(t, ad::cmul(t, scores, decay), allow);
    return ad::sum_all(t, ad::cmul(t, weights, ad::constant(w)));
  });
}

TEST_CASE("masked_softmax: denied entries zero; equal logits average values") {
  ad::Tape t;
  auto scores = ad::constant(Matrix::Zero(3, 3));
  Matrix allow(3, 3);
  allow << 0, 0, 0,
           1, 0, 0,
           1, 1, 0;
  auto w = ad::masked_softmax(t, scores, allow);
  for (int j = 0; j < 3; ++j) CHECK(w->value(0, j) == 0.0);  // denied row
  CHECK(w->value(1, 0) == 1.0);
  CHECK(w->value(2, 0) == doctest::Approx(0.5));
  CHECK(w->value(2, 1) == doctest::Approx(0.5));
  CHECK(w->value(2, 2) == 0.0);

  Matrix values(3, 2);
  values << 1.0, 2.0,
            3.0, 4.0,
            5.0, 6.0;
  auto ctx = ad::matmul(t, w, ad::constant(values));
  CHECK(ctx->value(0, 0) == 0.0);  // zero-context fallback
  CHECK(ctx->value(0, 1) == 0.0);
  CHECK(ctx->value(1, 0) == doctest::Approx(1.0));
  CHECK(ctx->value(2, 0) == doctest::Approx(2.0));  // mean of rows 0, 1
  CHECK(ctx->value(2, 1) == doctest::Approx(3.0));
  CHECK(ctx->value.allFinite());
}

TEST_CASE("autodiff: layer_norm gradients") {
  std::mt19937_64 rng(6);
  auto x = ad::leaf(random_matrix(rng, 5, 6));
  auto g = ad::leaf((Matrix::Ones(1, 6) + 0.1 * random_matrix(rng, 1, 6)).eval());
  auto b = ad::leaf((0.1 * random_matrix(rng, 1, 6)).eval());
  const Matrix w = random_matrix(rng, 5, 6);
  ParamList leaves = {{"x", x}, {"g", g}, {"b", b}};
  check_expr(
      leaves,
      [&](ad::Tape& t) {
        return ad::sum_all(t, ad::cmul(t, ad::layer_norm(t, x, g, b), ad::constant(w)));
      },
      5e-6);
}

TEST_CASE("autodiff: lstm_seq gradients") {
  std::mt19937_64 rng(7);
  const int T = 6, D = 3, H = 4;
  auto x = ad::leaf(random_matrix(rng, T, D));
  auto wx = ad::leaf(random_matrix(rng, D, 4 * H, 0.4));
  auto wh = ad::leaf(random_matrix(rng, H, 4 * H, 0.4));
  auto b = ad::leaf(random_matrix(rng, 1, 4 * H, 0.2));
  const Matrix w = random_matrix(rng, T, H);
  ParamList leaves = {{"x", x}, {"wx", wx}, {"wh", wh}, {"b", b}};

  check_expr(
      leaves,
      [&](ad::Tape& t) {
        return ad::sum_all(t, ad::cmul(t, ad::lstm_seq(t, x, wx, wh, b), ad::constant(w)));
      },
      1e-5);
}

TEST_CASE("autodiff: bce_with_logits value and gradient") {
  std::mt19937_64 rng(8);
  auto z = ad::leaf(Matrix::Zero(3, 1));
  ParamList leaves = {{"z", z}};
  {
    ad::Tape t;
    auto loss = ad::bce_with_logits_sum(t, z, {1.0, 0.0, 1.0});
    CHECK(loss->value(0, 0) == doctest::Approx(3.0 * std::log(2.0)));
  }
  z->value = random_matrix(rng, 3, 1, 2.0);
  check_expr(leaves, [&](ad::Tape& t) {
    return ad::bce_with_logits_sum(t, z, {1.0, 0.0, 1.0});
  });
}

TEST_CASE("autodiff: dropout semantics") {
  std::mt19937_64 rng(9);
  auto x = ad::leaf(Matrix::Ones(64, 64));
  ad::Tape t;
  CHECK(ad::dropout(t, x, 0.0, rng).get() == x.get());  // p = 0 is identity

  auto dropped = ad::dropout(t, x, 0.25, rng);
  long zeros = 0;
  for (Eigen::Index i = 0; i < 64; ++i) {
    for (Eigen::Index j = 0; j < 64; ++j) {
      const double v = dropped->value(i, j);
      CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.75)));
      zeros += v == 0.0;
    }
  }
  CHECK(zeros > 64 * 64 * 0.15);
  CHECK(zeros < 64 * 64 * 0.35);

  std::mt19937_64 rng_a(123), rng_b(123);
  auto da = ad::dropout(t, x, 0.5, rng_a);
  auto db = ad::dropout(t, x, 0.5, rng_b);
  CHECK(da->value == db->value);
}

TEST_CASE("autodiff: shape violations throw") {
  std::mt19937_64 rng(10);
  ad::Tape t;
  auto a = ad::leaf(random_matrix(rng, 2, 3));
  CHECK_THROWS_AS(ad::add(t, a, ad::leaf(random_matrix(rng, 3, 2))), ShapeError);
  CHECK_THROWS_AS(ad::matmul(t, a, a), ShapeError);
  CHECK_THROWS_AS(ad::gather_rows(t, a, {5}), ShapeError);
  CHECK_THROWS_AS(ad::slice_rows(t, a, 1, 5), ShapeError);
}
