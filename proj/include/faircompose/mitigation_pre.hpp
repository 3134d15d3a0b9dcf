#pragma once

#include <span>

#include "faircompose/core.hpp"
#include "faircompose/dataset.hpp"

namespace faircompose {

/// Per-cell weights w(d,y) = n_d * n_y / (n * n_{d,y}) from raw counts.
/// Guarantees a weighted favorable-rate difference of zero between groups.
struct ReweighResult {
  double w_priv_fav = 0.0;
  double w_unpriv_fav = 0.0;
  double w_priv_unfav = 0.0;
  double w_unpriv_unfav = 0.0;
  TabularDataset dataset;
};

ReweighResult reweigh(const TabularDataset& ds);

struct LfrParams {
  std::size_t k = 10;           // prototype count
  double ax = 0.01;             // reconstruction term weight
  double ay = 1.0;              // label term weight
  double az = 50.0;             // group-parity term weight
  std::size_t max_iters = 500;
  double temperature = 1.0;     // softmax sharpness of memberships
  bool relabel = false;         // replace labels with prototype label scores
  std::uint64_t seed = 0;
};

/// Prototype representation learned by gradient descent. Memberships are
/// softmax over negative squared prototype distances; prototype label
/// weights are kept in [0,1] through a logit parameterization.
struct LfrModel {
  Matrix prototypes;                 // k x d
  std::vector<double> label_logits;  // label weight u_j = sigmoid(logit_j)
  LfrParams params;
  std::size_t iterations = 0;
  double loss = 0.0;
  double loss_x = 0.0;  // reconstruction MSE
  double loss_y = 0.0;  // label cross-entropy
  double loss_z = 0.0;  // mean absolute group membership gap
  std::vector<double> loss_trace;  // objective after each accepted step
};

LfrModel lfr_fit(const TabularDataset& ds, const LfrParams& params);

/// Replaces features by membership-weighted prototype reconstructions.
/// When relabel is set, labels become thresholded prototype label scores.
TabularDataset lfr_apply(const LfrModel& model, const TabularDataset& ds, bool relabel);

namespace lfr_detail {

struct Eval {
  double loss = 0.0, lx = 0.0, ly = 0.0, lz = 0.0;
};

/// Objective (and optionally its gradient, laid out as k*d prototype
/// coordinates followed by k label logits). Exposed for the
/// finite-difference tests.
Eval evaluate(const Matrix& x, std::span<const int> labels, std::span<const int> groups,
              const LfrParams& params, std::span<const double> theta,
              std::vector<double>* grad);

/// Row memberships against prototypes: softmax_j(-||x_i - v_j||^2 / T).
Matrix memberships(const Matrix& x, const Matrix& prototypes, double temperature);

}  // namespace lfr_detail

}  // namespace faircompose
