#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace kt::ad {

using Matrix = Eigen::MatrixXd;

/// One value in the computation graph. Gradients are accumulated (+=) so a
/// leaf shared by many expressions, or reused across sequences of a batch,
/// collects the total derivative.
struct Node {
  Matrix value;
  Matrix grad;  // empty until first touched
  std::function<void()> backward;
  bool requires_grad = false;

  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }

  Matrix& ensure_grad() {
    if (grad.size() == 0) grad = Matrix::Zero(value.rows(), value.cols());
    return grad;
  }
  void zero_grad() {
    if (grad.size() != 0) grad.setZero();
  }
};

using NodePtr = std::shared_ptr<Node>;

/// Persistent trainable tensor (lives outside any tape).
NodePtr leaf(Matrix value, bool requires_grad = true);
/// Non-trainable input.
NodePtr constant(Matrix value);

/// Wengert list. Nodes are recorded in execution order, which is a valid
/// topological order, so backward() is a single reverse sweep. One tape per
/// forward/backward pass; destroying it frees all intermediates.
class Tape {
 public:
  NodePtr record(Matrix value, bool requires_grad,
                 std::function<void()> backward_fn);
  /// Seeds d(root)/d(root) = 1 (root must be 1x1) and sweeps in reverse.
  void backward(const NodePtr& root);
  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<NodePtr> nodes_;
};

// ---- elementwise / shape ----
NodePtr add(Tape& t, const NodePtr& a, const NodePtr& b);
NodePtr sub(Tape& t, const NodePtr& a, const NodePtr& b);
NodePtr cmul(Tape& t, const NodePtr& a, const NodePtr& b);
NodePtr scale(Tape& t, const NodePtr& a, double k);
NodePtr add_rowvec(Tape& t, const NodePtr& m, const NodePtr& row);  // row: 1xC
NodePtr rowwise_scale(Tape& t, const NodePtr& m, const NodePtr& col);  // col: Rx1
NodePtr matmul(Tape& t, const NodePtr& a, const NodePtr& b);
NodePtr transpose(Tape& t, const NodePtr& a);
NodePtr slice_rows(Tape& t, const NodePtr& a, Eigen::Index r0, Eigen::Index n);
NodePtr slice_cols(Tape& t, const NodePtr& a, Eigen::Index c0, Eigen::Index n);
NodePtr concat_cols(Tape& t, const std::vector<NodePtr>& parts);
NodePtr vstack(Tape& t, const std::vector<NodePtr>& parts);

// ---- nonlinearities ----
NodePtr sigmoid(Tape& t, const NodePtr& a);
NodePtr tanh_(Tape& t, const NodePtr& a);
NodePtr relu(Tape& t, const NodePtr& a);
NodePtr gelu(Tape& t, const NodePtr& a);  // exact erf form
NodePtr softplus(Tape& t, const NodePtr& a);
NodePtr exp_(Tape& t, const NodePtr& a);
NodePtr cos_(Tape& t, const NodePtr& a);
NodePtr sin_(Tape& t, const NodePtr& a);
NodePtr abs_(Tape& t, const NodePtr& a);
NodePtr square(Tape& t, const NodePtr& a);

// ---- gathers ----
/// Rows of `table` at the given indices.
NodePtr gather_rows(Tape& t, const NodePtr& table,
                    const std::vector<std::int32_t>& idx);
/// Segment means of table rows: output row i averages table rows
/// flat[offsets[i] .. offsets[i+1]-1]. offsets has n+1 entries.
NodePtr gather_rows_mean(Tape& t, const NodePtr& table,
                         const std::vector<std::int32_t>& flat,
                         const std::vector<std::int32_t>& offsets);
/// Elements m(rows[i], cols[i]) as an n x 1 column.
NodePtr gather_rc(Tape& t, const NodePtr& m, const std::vector<std::int32_t>& rows,
                  const std::vector<std::int32_t>& cols);
/// Segment means of gathered elements: output row i averages
/// m(rows[k], cols[k]) for k in offsets[i] .. offsets[i+1]-1.
NodePtr gather_rc_mean(Tape& t, const NodePtr& m,
                       const std::vector<std::int32_t>& rows,
                       const std::vector<std::int32_t>& cols,
                       const std::vector<std::int32_t>& offsets);

// ---- reductions / composites ----
NodePtr sum_all(Tape& t, const NodePtr& a);  // 1x1
NodePtr linear(Tape& t, const NodePtr& x, const NodePtr& w, const NodePtr& b);

/// out = factor * s * base, where s is a 1x1 node and base is constant.
NodePtr scalar_times(Tape& t, const NodePtr& s, const Matrix& base, double factor);

/// Row-wise softmax restricted to entries where allow != 0. Denied entries
/// get weight exactly 0; a fully-denied row yields an all-zero row instead
/// of NaN (the documented zero-context fallback).
NodePtr masked_softmax(Tape& t, const NodePtr& scores, const Matrix& allow);

/// Row-wise layer norm with affine gain/bias (each 1xC).
NodePtr layer_norm(Tape& t, const NodePtr& x, const NodePtr& gain,
                   const NodePtr& bias, double eps = 1e-5);

/// Inverted dropout; scales kept entries by 1/(1-p). Identity when p == 0.
NodePtr dropout(Tape& t, const NodePtr& x, double p, std::mt19937_64& rng);

/// Fused LSTM over a whole sequence. x: T x d. wx: d x 4H, wh: H x 4H,
/// b: 1 x 4H, gate order [input, forget, cell, output]. Initial h, c are
/// zero. Returns the T x H matrix of hidden states after each step.
NodePtr lstm_seq(Tape& t, const NodePtr& x, const NodePtr& wx, const NodePtr& wh,
                 const NodePtr& b);

/// Sum over steps of BCE(sigmoid(logit_i), target_i); logits n x 1, 1x1 out.
NodePtr bce_with_logits_sum(Tape& t, const NodePtr& logits,
                            const std::vector<double>& targets);

}  // namespace kt::ad
