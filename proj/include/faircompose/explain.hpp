#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "faircompose/core.hpp"
#include "faircompose/dataset.hpp"

namespace faircompose {

/// Scores a batch of feature rows; how explanations see the explained model.
using BatchScoreFn = std::function<std::vector<double>(const Matrix&)>;

/// Training-split statistics driving LIME's perturbation distribution:
/// Gaussian noise scaled by the column std for continuous features, and
/// empirical-frequency resampling for binary / one-hot columns.
struct TrainStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<ColumnKind> kinds;
  std::vector<int> onehot_group;
  std::vector<double> binary_freq;  // P(col == 1); 0 for continuous columns
  std::vector<std::string> names;
};

TrainStats compute_train_stats(const TabularDataset& train);

struct LimeParams {
  std::size_t num_samples = 5000;
  double kernel_width = 0.0;  // 0: 0.75 * sqrt(d)
  std::size_t top_k = 10;
};

struct Explanation {
  std::size_t instance_id = 0;
  // Sorted by |weight| descending, length min(top_k, d).
  std::vector<std::string> names;
  std::vector<int> feature_index;
  std::vector<double> weights;
  double intercept = 0.0;
  double r2 = 0.0;  // weighted surrogate fit quality; 0 when the target is constant
  std::uint64_t seed = 0;
};

/// Local surrogate: perturbs the instance, weighs samples by
/// exp(-dist^2 / sigma^2) in the standardized feature space, and fits a
/// weighted ridge regression (ridge 1.0) of model scores on the perturbed
/// features. Deterministic given the seed.
Explanation lime_explain(const BatchScoreFn& model, std::span<const double> instance,
                         std::size_t instance_id, const TrainStats& stats,
                         const LimeParams& params, std::uint64_t seed);

struct FaithfulnessScore {
  double value = 0.0;
  bool defined = false;
  std::vector<double> weights;  // explanation weights used
  std::vector<double> drops;    // score drop per removed feature
};

/// Replaces each explained feature independently by its baseline (train
/// mean), records the drop of the predicted-class score, and correlates the
/// drops with the attribution weights. Undefined when fewer than two
/// distinct drops exist or a variance vanishes.
FaithfulnessScore faithfulness(const BatchScoreFn& model, std::span<const double> instance,
                               const Explanation& explanation,
                               std::span<const double> baselines);

/// Uniform sample of `count` distinct row ids, deterministic given the seed,
/// returned sorted. These ids stay fixed across stages and models of a run.
std::vector<std::size_t> pick_explanation_instances(std::size_t n_test, std::size_t count,
                                                    std::uint64_t seed);

}  // namespace faircompose
