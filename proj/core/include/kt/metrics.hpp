#pragma once

#include <vector>

#include "kt/autodiff.hpp"

namespace kt {

/// Rank-based (Mann-Whitney) AUC with ties counted half. Throws DataError
/// (DegenerateLabels) unless both classes are present.
double auc(const std::vector<double>& predictions, const std::vector<int>& targets);

/// Mean binary cross-entropy over valid positions, on probabilities (logs
/// clamped at 1e-12). Targets binary; padding excluded by the mask. Throws
/// DataError (EmptyMask) when no position is valid.
double bce_loss(const ad::Matrix& predictions, const ad::Matrix& targets,
                const ad::Matrix& valid_mask);

}  // namespace kt
