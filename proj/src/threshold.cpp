#include "faircompose/threshold.hpp"

#include "faircompose/metrics.hpp"

namespace faircompose {

std::vector<double> default_threshold_grid() {
  std::vector<double> grid;
  grid.reserve(99);
  for (int i = 1; i <= 99; ++i) grid.push_back(i * 0.01);
  return grid;
}

ThresholdRule tune_threshold(std::span<const double> scores,
                             std::span<const int> labels,
                             std::span<const double> grid) {
  if (grid.empty()) fail(ErrorKind::Threshold, "threshold grid is empty");
  long long pos = 0, neg = 0;
  for (int y : labels) (y == 1 ? pos : neg)++;
  if (pos == 0 || neg == 0)
    fail(ErrorKind::Threshold, "validation labels contain a single class");

  double best_t = grid.front();
  double best_bacc = -1.0;
  for (double t : grid) {
    long long tp = 0, tn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const bool fav = scores[i] >= t;
      if (labels[i] == 1)
        tp += fav;
      else
        tn += !fav;
    }
    const double bacc = (static_cast<double>(tp) / static_cast<double>(pos) +
                         static_cast<double>(tn) / static_cast<double>(neg)) /
                        2.0;
    if (bacc > best_bacc) {
      best_bacc = bacc;
      best_t = t;
    }
  }
  return ThresholdRule{best_t};
}

ThresholdRule tune_threshold(std::span<const double> scores,
                             std::span<const int> labels) {
  const std::vector<double> grid = default_threshold_grid();
  return tune_threshold(scores, labels, grid);
}

std::vector<int> apply_threshold(std::span<const double> scores, ThresholdRule rule) {
  std::vector<int> preds(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    preds[i] = scores[i] >= rule.threshold ? 1 : 0;
  return preds;
}

}  // namespace faircompose
