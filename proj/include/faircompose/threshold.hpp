#pragma once

#include <span>
#include <vector>

#include "faircompose/core.hpp"

namespace faircompose {

/// Predict favorable iff score >= threshold.
struct ThresholdRule {
  double threshold = 0.5;
};

/// 99 points: 0.01, 0.02, ..., 0.99.
std::vector<double> default_threshold_grid();

/// Grid member maximizing balanced accuracy on the validation data; ties
/// break toward the smallest threshold.
ThresholdRule tune_threshold(std::span<const double> scores,
                             std::span<const int> labels,
                             std::span<const double> grid);
ThresholdRule tune_threshold(std::span<const double> scores,
                             std::span<const int> labels);

std::vector<int> apply_threshold(std::span<const double> scores, ThresholdRule rule);

}  // namespace faircompose
