#pragma once

#include <span>

#include "faircompose/core.hpp"

namespace faircompose {

// Group convention throughout: groups[i] == 1 means privileged, 0 means
// unprivileged. Labels and predictions use 1 for the favorable outcome.

struct GroupRates {
  double selection_priv = 0.0;
  double selection_unpriv = 0.0;
  double tpr_priv = 0.0;
  double tpr_unpriv = 0.0;
  double fpr_priv = 0.0;
  double fpr_unpriv = 0.0;
};

struct MetricBundle {
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  double roc_auc = 0.0;
  double spd = 0.0;
  double di = 0.0;
  bool di_infinite = false;
  double eod = 0.0;
  double aod = 0.0;
  GroupRates rates;
};

/// Statistical parity difference: selection rate of the unprivileged group
/// minus that of the privileged group.
double spd(std::span<const int> preds, std::span<const int> groups);

/// Disparate impact: unprivileged selection rate over privileged. Returns
/// +infinity when only the privileged rate is zero and 1.0 when both are.
double di(std::span<const int> preds, std::span<const int> groups);

/// Equal opportunity difference: TPR(unpriv) - TPR(priv).
double eod(std::span<const int> preds, std::span<const int> labels,
           std::span<const int> groups);

/// Average odds difference: mean of the FPR and TPR gaps.
double aod(std::span<const int> preds, std::span<const int> labels,
           std::span<const int> groups);

double accuracy(std::span<const int> preds, std::span<const int> labels);
double balanced_accuracy(std::span<const int> preds, std::span<const int> labels);

/// Mann-Whitney AUC; tied scores get half credit.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

GroupRates group_rates(std::span<const int> preds, std::span<const int> labels,
                       std::span<const int> groups);

MetricBundle compute_metrics(std::span<const double> scores,
                             std::span<const int> preds,
                             std::span<const int> labels,
                             std::span<const int> groups);

}  // namespace faircompose
