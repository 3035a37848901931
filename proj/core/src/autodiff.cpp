#include "kt/autodiff.hpp"

#include <cmath>

#include "kt/errors.hpp"

namespace kt::ad {
namespace {

void check_same_shape(const NodePtr& a, const NodePtr& b, const char* op) {
  if (a->rows() != b->rows() || a->cols() != b->cols()) {
    throw ShapeError(std::string("ShapeMismatch in ") + op + ": " +
                     std::to_string(a->rows()) + "x" + std::to_string(a->cols()) +
                     " vs " + std::to_string(b->rows()) + "x" +
                     std::to_string(b->cols()));
  }
}

}  // namespace

NodePtr leaf(Matrix value, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

NodePtr constant(Matrix value) { return leaf(std::move(value), false); }

NodePtr Tape::record(Matrix value, bool requires_grad,
                     std::function<void()> backward_fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  if (requires_grad) n->backward = std::move(backward_fn);
  nodes_.push_back(n);
  return n;
}

void Tape::backward(const NodePtr& root) {
  if (root->rows() != 1 || root->cols() != 1) {
    throw ShapeError("backward root must be 1x1");
  }
  root->ensure_grad()(0, 0) += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = **it;
    if (n.backward && n.grad.size() != 0) n.backward();
  }
}

NodePtr add(Tape& t, const NodePtr& a, const NodePtr& b) {
  check_same_shape(a, b, "add");
  const bool rg = a->requires_grad || b->requires_grad;
  auto out = t.record(a->value + b->value, rg, nullptr);
  if (rg) {
    out->backward = [a, b, out]() {
      if (a->requires_grad) a->ensure_grad() += out->grad;
      if (b->requires_grad) b->ensure_grad() += out->grad;
    };
  }
  return out;
}

NodePtr sub(Tape& t, const NodePtr& a, const NodePtr& b) {
  check_same_shape(a, b, "sub");
  const bool rg = a->requires_grad || b->requires_grad;
  auto out = t.record(a->value - b->value, rg, nullptr);
  if (rg) {
    out->backward = [a, b, out]() {
      if (a->requires_grad) a->ensure_grad() += out->grad;
      if (b->requires_grad) b->ensure_grad() -= out->grad;
    };
  }
  return out;
}

NodePtr cmul(Tape& t, const NodePtr& a, const NodePtr& b) {
  check_same_shape(a, b, "cmul");
  const bool rg = a->requires_grad || b->requires_grad;
  auto out = t.record(a->value.cwiseProduct(b->value), rg, nullptr);
  if (rg) {
    out->backward = [a, b, out]() {
      if (a->requires_grad) a->ensure_grad() += out->grad.cwiseProduct(b->value);
      if (b->requires_grad) b->ensure_grad() += out->grad.cwiseProduct(a->value);
    };
  }
  return out;
}

NodePtr scale(Tape& t, const NodePtr& a, double k) {
  auto out = t.record(a->value * k, a->requires_grad, nullptr);
  if (a->requires_grad) {
    out->backward = [a, out, k]() { a->ensure_grad() += out->grad * k; };
  }
  return out;
}

NodePtr add_rowvec(Tape& t, const NodePtr& m, const NodePtr& row) {
  if (row->rows() != 1 || row->cols() != m->cols()) {
    throw ShapeError("ShapeMismatch in add_rowvec");
  }
  const bool rg = m->requires_grad || row->requires_grad;
  auto out = t.record(m->value.rowwise() + row->value.row(0), rg, nullptr);
  if (rg) {
    out->backward = [m, row, out]() {
      if (m->requires_grad) m->ensure_grad() += out->grad;
      if (row->requires_grad) row->ensure_grad() += out->grad.colwise().sum();
    };
  }
  return out;
}

NodePtr rowwise_scale(Tape& t, const NodePtr& m, const NodePtr& col) {
  if (col->cols() != 1 || col->rows() != m->rows()) {
    throw ShapeError("ShapeMismatch in rowwise_scale");
  }
  const bool rg = m->requires_grad || col->requires_grad;
  auto out =
      t.record(m->value.array().colwise() * col->value.col(0).array(), rg, nullptr);
  if (rg) {
    out->backward = [m, col, out]() {
      if (m->requires_grad)
        m->ensure_grad().array() += out->grad.array().colwise() * col->value.col(0).array();
      if (col->requires_grad)
        col->ensure_grad() += out->grad.cwiseProduct(m->value).rowwise().sum();
    };
  }
  return out;
}

NodePtr matmul(Tape& t, const NodePtr& a, const NodePtr& b) {
  if (a->cols() != b->rows()) {
    throw ShapeError("ShapeMismatch in matmul: " + std::to_string(a->cols()) +
                     " vs " + std::to_string(b->rows()));
  }
  const bool rg = a->requires_grad || b->requires_grad;
  auto out = t.record(a->value * b->value, rg, nullptr);
  if (rg) {
    out->backward = [a, b, out]() {
      if (a->requires_grad) a->ensure_grad() += out->grad * b->value.transpose();
      if (b->requires_grad) b->ensure_grad() += a->value.transpose() * out->grad;
    };
  }
  return out;
}

NodePtr transpose(Tape& t, const NodePtr& a) {
  auto out = t.record(a->value.transpose(), a->requires_grad, nullptr);
  if (a->requires_grad) {
    out->backward = [a, out]() { a->ensure_grad() += out->grad.transpose(); };
  }
  return out;
}

NodePtr slice_rows(Tape& t, const NodePtr& a, Eigen::Index r0, Eigen::Index n) {
  if (r0 < 0 || r0 + n > a->rows()) throw ShapeError("slice_rows out of range");
  auto out = t.record(a->value.middleRows(r0, n), a->requires_grad, nullptr);
  if (a->requires_grad) {
    out->backward = [a, out, r0, n]() {
      a->ensure_grad().middleRows(r0, n) += out->grad;
    };
  }
  return out;
}

NodePtr slice_cols(Tape& t, const NodePtr& a, Eigen::Index c0, Eigen::Index n) {
  if (c0 < 0 || c0 + n > a->cols()) throw ShapeError("slice_cols out of range");
  auto out = t.record(a->value.middleCols(c0, n), a->requires_grad, nullptr);
  if (a->requires_grad) {
    out->backward = [a, out, c0, n]() {
      a->ensure_grad().middleCols(c0, n) += out->grad;
    };
  }
  return out;
}

NodePtr concat_cols(Tape& t, const std::vector<NodePtr>& parts) {
  Eigen::Index rows = parts.at(0)->rows();
  Eigen::Index cols = 0;
  bool rg = false;
  for (const auto& p : parts) {
    if (p->rows() != rows) throw ShapeError("ShapeMismatch in concat_cols");
    cols += p->cols();
    rg = rg || p->requires_grad;
  }
  Matrix v(rows, cols);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    v.middleCols(c, p->cols()) = p->value;
    c += p->cols();
  }
  auto out = t.record(std::move(v), rg, nullptr);
  if (rg) {
    out->backward = [parts, out]() {
      Eigen::Index c = 0;
      for (const auto& p : parts) {
        if (p->requires_grad) p->ensure_grad() += out->grad.middleCols(c, p->cols());
        c += p->cols();
      }
    };
  }
  return out;
}

NodePtr vstack(Tape& t, const std::vector<NodePtr>& parts) {
  Eigen::Index cols = parts.at(0)->cols();
  Eigen::Index rows = 0;
  bool rg = false;
  for (const auto& p : parts) {
    if (p->cols() != cols) throw ShapeError("ShapeMismatch in vstack");
    rows += p->rows();
    rg = rg || p->requires_grad;
  }
  Matrix v(rows, cols);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    v.middleRows(r, p->rows()) = p->value;
    r += p->rows();
  }
  auto out = t.record(std::move(v), rg, nullptr);
  if (rg) {
    out->backward = [parts, out]() {
      Eigen::Index r = 0;
      for (const auto& p : parts) {
        if (p->requires_grad) p->ensure_grad() += out->grad.middleRows(r, p->rows());
        r += p->rows();
      }
    };
  }
  return out;
}

namespace {

template <typename F, typename DF>
NodePtr unary(Tape& t, const NodePtr& a, F f, DF df) {
  auto out = t.record(a->value.unaryExpr(f), a->requires_grad, nullptr);
  if (a->requires_grad) {
    out->backward = [a, out, df]() {
      a->ensure_grad().array() +=
          out->grad.array() * a->value.unaryExpr(df).array();
    };
  }
  return out;
}

}  // namespace

NodePtr sigmoid(Tape& t, const NodePtr& a) {
  auto out = t.record(
      a->value.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); }),
      a->requires_grad, nullptr);
  if (a->requires_grad) {
    out->backward = [a, out]() {
      a->ensure_grad().array() +=
          out->grad.array() * out->value.array() * (1.0 - out->value.array());
    };
  }
  return out;
}

NodePtr tanh_(Tape& t, const NodePtr& a) {
  auto out = t.record(a->value.unaryExpr([](double x) { return std::tanh(x); }),
                      a->requires_grad, nullptr);
  if (a->requires_grad) {
    out->backward = [a, out]() {
      a->ensure_grad().array() +=
          out->grad.array() * (1.0 - out->value.array().square());
    };
  }
  return out;
}

NodePtr relu(Tape& t, const NodePtr& a) {
  return unary(
      t, a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x) { return x > 0 ? 1.0 : 0.0; });
}

NodePtr gelu(Tape& t, const NodePtr& a) {
  constexpr double kInvSqrt2 = 0.7071067811865475244;
  constexpr double kInvSqrt2Pi = 0.3989422804014326779;
  return unary(
      t, a,
      [=](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
      [=](double x) {
        const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
        return cdf + x * pdf;
      });
}

NodePtr softplus(Tape& t, const NodePtr& a) {
  return unary(
      t, a,
      [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); },
      [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

NodePtr exp_(Tape& t, const NodePtr& a) {
  auto out = t.record(a->value.array().exp().matrix(), a->requires_grad, nullptr);
  if (a->requires_grad) {
    out->backward = [a, out]() {
      a->ensure_grad().array() += out->grad.array() * out->value.array();
    };
  }
  return out;
}

NodePtr cos_(Tape& t, const NodePtr& a) {
  return unary(
      t, a, [](double x) { return std::cos(x); },
      [](double x) { return -std::sin(x); });
}

NodePtr sin_(Tape& t, const NodePtr& a) {
  return unary(
      t, a, [](double x) { return std::sin(x); },
      [](double x) { return std::cos(x); });
}

NodePtr abs_(Tape& t, const NodePtr& a) {
  return unary(
      t, a, [](double x) { return std::abs(x); },
      [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

NodePtr square(Tape& t, const NodePtr& a) {
  auto out = t.record(a->value.array().square().matrix(), a->requires_grad, nullptr);
  if (a->requires_grad) {
    out->backward = [a, out]() {
      a->ensure_grad().array() += 2.0 * out->grad.array() * a->value.array();
    };
  }
  return out;
}

NodePtr gather_rows(Tape& t, const NodePtr& table,
                    const std::vector<std::int32_t>& idx) {
  Matrix v(static_cast<Eigen::Index>(idx.size()), table->cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= table->rows()) {
      throw ShapeError("gather_rows index out of range: " + std::to_string(idx[i]));
    }
    v.row(static_cast<Eigen::Index>(i)) = table->value.row(idx[i]);
  }
  auto out = t.record(std::move(v), table->requires_grad, nullptr);
  if (table->requires_grad) {
    out->backward = [table, out, idx]() {
      auto& g = table->ensure_grad();
      for (std::size_t i = 0; i < idx.size(); ++i) {
        g.row(idx[i]) += out->grad.row(static_cast<Eigen::Index>(i));
      }
    };
  }
  return out;
}

NodePtr gather_rows_mean(Tape& t, const NodePtr& table,
                         const std::vector<std::int32_t>& flat,
                         const std::vector<std::int32_t>& offsets) {
  const auto n = static_cast<Eigen::Index>(offsets.size()) - 1;
  Matrix v = Matrix::Zero(n, table->cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const int lo = offsets[i], hi = offsets[i + 1];
    if (hi <= lo) throw ShapeError("gather_rows_mean: empty segment");
    for (int k = lo; k < hi; ++k) v.row(i) += table->value.row(flat.at(k));
    v.row(i) /= static_cast<double>(hi - lo);
  }
  auto out = t.record(std::move(v), table->requires_grad, nullptr);
  if (table->requires_grad) {
    out->backward = [table, out, flat, offsets, n]() {
      auto& g = table->ensure_grad();
      for (Eigen::Index i = 0; i < n; ++i) {
        const int lo = offsets[i], hi = offsets[i + 1];
        const double inv = 1.0 / static_cast<double>(hi - lo);
        for (int k = lo; k < hi; ++k) g.row(flat[k]) += inv * out->grad.row(i);
      }
    };
  }
  return out;
}

NodePtr gather_rc(Tape& t, const NodePtr& m, const std::vector<std::int32_t>& rows,
                  const std::vector<std::int32_t>& cols) {
  if (rows.size() != cols.size()) throw ShapeError("gather_rc size mismatch");
  Matrix v(static_cast<Eigen::Index>(rows.size()), 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= m->rows() || cols[i] < 0 || cols[i] >= m->cols()) {
      throw ShapeError("gather_rc index out of range");
    }
    v(static_cast<Eigen::Index>(i), 0) = m->value(rows[i], cols[i]);
  }
  auto out = t.record(std::move(v), m->requires_grad, nullptr);
  if (m->requires_grad) {
    out->backward = [m, out, rows, cols]() {
      auto& g = m->ensure_grad();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        g(rows[i], cols[i]) += out->grad(static_cast<Eigen::Index>(i), 0);
      }
    };
  }
  return out;
}

NodePtr gather_rc_mean(Tape& t, const NodePtr& m,
                       const std::vector<std::int32_t>& rows,
                       const std::vector<std::int32_t>& cols,
                       const std::vector<std::int32_t>& offsets) {
  if (rows.size() != cols.size()) throw ShapeError("gather_rc_mean size mismatch");
  const auto n = static_cast<Eigen::Index>(offsets.size()) - 1;
  Matrix v = Matrix::Zero(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int lo = offsets[i], hi = offsets[i + 1];
    if (hi <= lo) throw ShapeError("gather_rc_mean: empty segment");
    for (int k = lo; k < hi; ++k) v(i, 0) += m->value(rows.at(k), cols.at(k));
    v(i, 0) /= static_cast<double>(hi - lo);
  }
  auto out = t.record(std::move(v), m->requires_grad, nullptr);
  if (m->requires_grad) {
    out->backward = [m, out, rows, cols, offsets, n]() {
      auto& g = m->ensure_grad();
      for (Eigen::Index i = 0; i < n; ++i) {
        const int lo = offsets[i], hi = offsets[i + 1];
        const double inv = 1.0 / static_cast<double>(hi - lo);
        for (int k = lo; k < hi; ++k) {
          g(rows[k], cols[k]) += inv * out->grad(i, 0);
        }
      }
    };
  }
  return out;
}

NodePtr sum_all(Tape& t, const NodePtr& a) {
  Matrix v(1, 1);
  v(0, 0) = a->value.sum();
  auto out = t.record(std::move(v), a->requires_grad, nullptr);
  if (a->requires_grad) {
    out->backward = [a, out]() {
      a->ensure_grad().array() += out->grad(0, 0);
    };
  }
  return out;
}

NodePtr linear(Tape& t, const NodePtr& x, const NodePtr& w, const NodePtr& b) {
  return add_rowvec(t, matmul(t, x, w), b);
}

NodePtr scalar_times(Tape& t, const NodePtr& s, const Matrix& base, double factor) {
  if (s->rows() != 1 || s->cols() != 1) throw ShapeError("scalar_times needs 1x1");
  auto out = t.record(base * (factor * s->value(0, 0)), s->requires_grad, nullptr);
  if (s->requires_grad) {
    out->backward = [s, out, base, factor]() {
      s->ensure_grad()(0, 0) += factor * base.cwiseProduct(out->grad).sum();
    };
  }
  return out;
}

NodePtr masked_softmax(Tape& t, const NodePtr& scores, const Matrix& allow) {
  if (allow.rows() != scores->rows() || allow.cols() != scores->cols()) {
    throw ShapeError("ShapeMismatch in masked_softmax");
  }
  Matrix w = Matrix::Zero(scores->rows(), scores->cols());
  for (Eigen::Index i = 0; i < scores->rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < scores->cols(); ++j) {
      if (allow(i, j) != 0.0) mx = std::max(mx, scores->value(i, j));
    }
    if (!std::isfinite(mx)) continue;  // fully denied row -> zeros
    double z = 0.0;
    for (Eigen::Index j = 0; j < scores->cols(); ++j) {
      if (allow(i, j) != 0.0) {
        w(i, j) = std::exp(scores->value(i, j) - mx);
        z += w(i, j);
      }
    }
    w.row(i) /= z;
  }
  auto out = t.record(std::move(w), scores->requires_grad, nullptr);
  if (scores->requires_grad) {
    out->backward = [scores, out]() {
      auto& g = scores->ensure_grad();
      for (Eigen::Index i = 0; i < out->rows(); ++i) {
        const double dot = out->grad.row(i).dot(out->value.row(i));
        g.row(i).array() +=
            out->value.row(i).array() * (out->grad.row(i).array() - dot);
      }
    };
  }
  return out;
}

NodePtr layer_norm(Tape& t, const NodePtr& x, const NodePtr& gain,
                   const NodePtr& bias, double eps) {
  if (gain->rows() != 1 || gain->cols() != x->cols() || bias->rows() != 1 ||
      bias->cols() != x->cols()) {
    throw ShapeError("ShapeMismatch in layer_norm");
  }
  const Eigen::Index n = x->cols();
  Eigen::VectorXd mean(x->rows()), inv_std(x->rows());
  Matrix xhat(x->rows(), n);
  for (Eigen::Index i = 0; i < x->rows(); ++i) {
    mean(i) = x->value.row(i).mean();
    const double var = (x->value.row(i).array() - mean(i)).square().mean();
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (x->value.row(i).array() - mean(i)) * inv_std(i);
  }
  Matrix v = (xhat.array().rowwise() * gain->value.row(0).array()).rowwise() +
             bias->value.row(0).array();
  const bool rg = x->requires_grad || gain->requires_grad || bias->requires_grad;
  auto out = t.record(std::move(v), rg, nullptr);
  if (rg) {
    out->backward = [x, gain, bias, out, xhat, inv_std, n]() {
      if (bias->requires_grad) bias->ensure_grad() += out->grad.colwise().sum();
      if (gain->requires_grad)
        gain->ensure_grad() += out->grad.cwiseProduct(xhat).colwise().sum();
      if (x->requires_grad) {
        auto& g = x->ensure_grad();
        for (Eigen::Index i = 0; i < x->rows(); ++i) {
          // d xhat
          Eigen::RowVectorXd dxh =
              out->grad.row(i).cwiseProduct(gain->value.row(0));
          const double s1 = dxh.sum();
          const double s2 = dxh.dot(xhat.row(i));
          g.row(i).array() +=
              inv_std(i) *
              (dxh.array() - s1 / static_cast<double>(n) -
               xhat.row(i).array() * s2 / static_cast<double>(n));
        }
      }
    };
  }
  return out;
}

NodePtr dropout(Tape& t, const NodePtr& x, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw ShapeError("dropout p must be < 1");
  const double keep = 1.0 - p;
  std::bernoulli_distribution dist(keep);
  Matrix mask(x->rows(), x->cols());
  for (Eigen::Index i = 0; i < x->rows(); ++i) {
    for (Eigen::Index j = 0; j < x->cols(); ++j) {
      mask(i, j) = dist(rng) ? 1.0 / keep : 0.0;
    }
  }
  auto out = t.record(x->value.cwiseProduct(mask), x->requires_grad, nullptr);
  if (x->requires_grad) {
    out->backward = [x, out, mask]() {
      x->ensure_grad() += out->grad.cwiseProduct(mask);
    };
  }
  return out;
}

NodePtr lstm_seq(Tape& t, const NodePtr& x, const NodePtr& wx, const NodePtr& wh,
                 const NodePtr& b) {
  const Eigen::Index T = x->rows();
  const Eigen::Index H4 = wx->cols();
  if (H4 % 4 != 0 || wx->rows() != x->cols() || wh->cols() != H4 ||
      wh->rows() != H4 / 4 || b->rows() != 1 || b->cols() != H4) {
    throw ShapeError("ShapeMismatch in lstm_seq");
  }
  const Eigen::Index H = H4 / 4;

  Matrix gates(T, H4);   // post-activation [i f g o]
  Matrix cells(T, H);    // c_t
  Matrix hidden(T, H);   // h_t
  Eigen::RowVectorXd h_prev = Eigen::RowVectorXd::Zero(H);
  Eigen::RowVectorXd c_prev = Eigen::RowVectorXd::Zero(H);
  for (Eigen::Index step = 0; step < T; ++step) {
    Eigen::RowVectorXd z =
        x->value.row(step) * wx->value + h_prev * wh->value + b->value.row(0);
    auto gi = gates.row(step).segment(0, H);
    auto gf = gates.row(step).segment(H, H);
    auto gg = gates.row(step).segment(2 * H, H);
    auto go = gates.row(step).segment(3 * H, H);
    gi = (1.0 / (1.0 + (-z.segment(0, H).array()).exp())).matrix();
    gf = (1.0 / (1.0 + (-z.segment(H, H).array()).exp())).matrix();
    gg = z.segment(2 * H, H).array().tanh().matrix();
    go = (1.0 / (1.0 + (-z.segment(3 * H, H).array()).exp())).matrix();
    cells.row(step) =
        gf.cwiseProduct(c_prev) + gi.cwiseProduct(gg);
    hidden.row(step) =
        go.cwiseProduct(cells.row(step).array().tanh().matrix());
    h_prev = hidden.row(step);
    c_prev = cells.row(step);
  }

  const bool rg = x->requires_grad || wx->requires_grad || wh->requires_grad ||
                  b->requires_grad;
  auto out = t.record(hidden, rg, nullptr);
  if (rg) {
    out->backward = [x, wx, wh, b, out, gates, cells, H, T]() {
      using RowArray = Eigen::Array<double, 1, Eigen::Dynamic>;
      RowArray dh_next = RowArray::Zero(H);
      RowArray dc_next = RowArray::Zero(H);
      Matrix dz_all(T, 4 * H);
      for (Eigen::Index step = T - 1; step >= 0; --step) {
        const RowArray gi = gates.row(step).segment(0, H).array();
        const RowArray gf = gates.row(step).segment(H, H).array();
        const RowArray gg = gates.row(step).segment(2 * H, H).array();
        const RowArray go = gates.row(step).segment(3 * H, H).array();
        const RowArray tanh_c = cells.row(step).array().tanh();

        const RowArray dh = out->grad.row(step).array() + dh_next;
        const RowArray dc = dh * go * (1.0 - tanh_c.square()) + dc_next;

        const RowArray c_prev = step == 0
                                    ? RowArray::Zero(H).eval()
                                    : RowArray(cells.row(step - 1).array());

        auto dz = dz_all.row(step);
        dz.segment(0, H) = (dc * gg * gi * (1.0 - gi)).matrix();
        dz.segment(H, H) = (dc * c_prev * gf * (1.0 - gf)).matrix();
        dz.segment(2 * H, H) = (dc * gi * (1.0 - gg.square())).matrix();
        dz.segment(3 * H, H) = (dh * tanh_c * go * (1.0 - go)).matrix();

        dh_next = (dz_all.row(step) * wh->value.transpose()).array();
        dc_next = dc * gf;
      }
      if (x->requires_grad) x->ensure_grad() += dz_all * wx->value.transpose();
      if (wx->requires_grad) wx->ensure_grad() += x->value.transpose() * dz_all;
      if (wh->requires_grad) {
        auto& g = wh->ensure_grad();
        for (Eigen::Index step = 1; step < T; ++step) {
          g += out->value.row(step - 1).transpose() * dz_all.row(step);
        }
      }
      if (b->requires_grad) b->ensure_grad() += dz_all.colwise().sum();
    };
  }
  return out;
}

NodePtr bce_with_logits_sum(Tape& t, const NodePtr& logits,
                            const std::vector<double>& targets) {
  if (logits->cols() != 1 ||
      logits->rows() != static_cast<Eigen::Index>(targets.size())) {
    throw ShapeError("ShapeMismatch in bce_with_logits_sum");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double z = logits->value(static_cast<Eigen::Index>(i), 0);
    // softplus(z) - target*z, stable for large |z|
    const double sp = z > 30.0 ? z : std::log1p(std::exp(z));
    total += sp - targets[i] * z;
  }
  Matrix v(1, 1);
  v(0, 0) = total;
  auto out = t.record(std::move(v), logits->requires_grad, nullptr);
  if (logits->requires_grad) {
    out->backward = [logits, out, targets]() {
      auto& g = logits->ensure_grad();
      const double upstream = out->grad(0, 0);
      for (std::size_t i = 0; i < targets.size(); ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        const double z = logits->value(idx, 0);
        const double sig = 1.0 / (1.0 + std::exp(-z));
        g(idx, 0) += upstream * (sig - targets[i]);
      }
    };
  }
  return out;
}

}  // namespace kt::ad
