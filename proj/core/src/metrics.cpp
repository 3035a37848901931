#include "kt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kt/errors.hpp"

namespace kt {

double auc(const std::vector<double>& predictions, const std::vector<int>& targets) {
  if (predictions.size() != targets.size()) {
    throw DataError("auc: prediction/target size mismatch");
  }
  const std::size_t n = predictions.size();
  std::size_t n_pos = 0;
  for (int t : targets) n_pos += t != 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw DataError("DegenerateLabels: auc needs both classes");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a] < predictions[b];
  });

  // Average ranks within tied groups (1-based).
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && predictions[order[j + 1]] == predictions[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      if (targets[order[k]] != 0) pos_rank_sum += avg_rank;
    }
    i = j + 1;
  }

  const double u = pos_rank_sum -
                   static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double bce_loss(const ad::Matrix& predictions, const ad::Matrix& targets,
                const ad::Matrix& valid_mask) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols() ||
      predictions.rows() != valid_mask.rows() ||
      predictions.cols() != valid_mask.cols()) {
    throw ShapeError("ShapeMismatch in bce_loss");
  }
  constexpr double kEps = 1e-12;
  double total = 0.0;
  long count = 0;
  for (Eigen::Index i = 0; i < predictions.rows(); ++i) {
    for (Eigen::Index j = 0; j < predictions.cols(); ++j) {
      if (valid_mask(i, j) == 0.0) continue;
      const double p = std::clamp(predictions(i, j), kEps, 1.0 - kEps);
      const double y = targets(i, j);
      total += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
      ++count;
    }
  }
  if (count == 0) throw DataError("EmptyMask: no valid positions");
  return total / static_cast<double>(count);
}

}  // namespace kt
