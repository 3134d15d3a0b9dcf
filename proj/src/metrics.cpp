#include "faircompose/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace faircompose {

namespace {

struct GroupCounts {
  // [group][label][pred] counts, group 1 = privileged.
  long long c[2][2][2] = {};
  long long group_total(int g) const {
    return c[g][0][0] + c[g][0][1] + c[g][1][0] + c[g][1][1];
  }
  long long selected(int g) const { return c[g][0][1] + c[g][1][1]; }
  long long positives(int g) const { return c[g][1][0] + c[g][1][1]; }
  long long negatives(int g) const { return c[g][0][0] + c[g][0][1]; }
};

GroupCounts count(std::span<const int> preds, std::span<const int> labels,
                  std::span<const int> groups) {
  GroupCounts gc;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int g = groups.empty() ? 0 : groups[i];
    const int y = labels.empty() ? 0 : labels[i];
    ++gc.c[g][y][preds[i]];
  }
  return gc;
}

void require_groups_nonempty(const GroupCounts& gc) {
  if (gc.group_total(0) == 0) fail(ErrorKind::Metric, "unprivileged group is empty");
  if (gc.group_total(1) == 0) fail(ErrorKind::Metric, "privileged group is empty");
}

}  // namespace

double spd(std::span<const int> preds, std::span<const int> groups) {
  const GroupCounts gc = count(preds, {}, groups);
  require_groups_nonempty(gc);
  const double rate_u = static_cast<double>(gc.selected(0)) / static_cast<double>(gc.group_total(0));
  const double rate_p = static_cast<double>(gc.selected(1)) / static_cast<double>(gc.group_total(1));
  return rate_u - rate_p;
}

double di(std::span<const int> preds, std::span<const int> groups) {
  const GroupCounts gc = count(preds, {}, groups);
  require_groups_nonempty(gc);
  const double rate_u = static_cast<double>(gc.selected(0)) / static_cast<double>(gc.group_total(0));
  const double rate_p = static_cast<double>(gc.selected(1)) / static_cast<double>(gc.group_total(1));
  if (rate_p == 0.0) {
    // 0/0 means both groups are (never) selected equally; x/0 is unbounded.
    return rate_u == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  return rate_u / rate_p;
}

double eod(std::span<const int> preds, std::span<const int> labels,
           std::span<const int> groups) {
  const GroupCounts gc = count(preds, labels, groups);
  require_groups_nonempty(gc);
  if (gc.positives(0) == 0 || gc.positives(1) == 0)
    fail(ErrorKind::Metric, "TPR undefined: a group has no positive-label instances");
  const double tpr_u = static_cast<double>(gc.c[0][1][1]) / static_cast<double>(gc.positives(0));
  const double tpr_p = static_cast<double>(gc.c[1][1][1]) / static_cast<double>(gc.positives(1));
  return tpr_u - tpr_p;
}

double aod(std::span<const int> preds, std::span<const int> labels,
           std::span<const int> groups) {
  const GroupCounts gc = count(preds, labels, groups);
  require_groups_nonempty(gc);
  for (int g = 0; g < 2; ++g) {
    if (gc.positives(g) == 0)
      fail(ErrorKind::Metric, "TPR undefined: a group has no positive-label instances");
    if (gc.negatives(g) == 0)
      fail(ErrorKind::Metric, "FPR undefined: a group has no negative-label instances");
  }
  const double tpr_u = static_cast<double>(gc.c[0][1][1]) / static_cast<double>(gc.positives(0));
  const double tpr_p = static_cast<double>(gc.c[1][1][1]) / static_cast<double>(gc.positives(1));
  const double fpr_u = static_cast<double>(gc.c[0][0][1]) / static_cast<double>(gc.negatives(0));
  const double fpr_p = static_cast<double>(gc.c[1][0][1]) / static_cast<double>(gc.negatives(1));
  return ((fpr_u - fpr_p) + (tpr_u - tpr_p)) / 2.0;
}

double accuracy(std::span<const int> preds, std::span<const int> labels) {
  if (preds.empty() || preds.size() != labels.size())
    fail(ErrorKind::Metric, "accuracy requires matching nonempty inputs");
  long long correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

double balanced_accuracy(std::span<const int> preds, std::span<const int> labels) {
  long long tp = 0, tn = 0, pos = 0, neg = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] == 1) {
      ++pos;
      tp += preds[i] == 1;
    } else {
      ++neg;
      tn += preds[i] == 0;
    }
  }
  if (pos == 0 || neg == 0)
    fail(ErrorKind::Metric, "balanced accuracy requires both classes");
  const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
  const double tnr = static_cast<double>(tn) / static_cast<double>(neg);
  return (tpr + tnr) / 2.0;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  long long pos = 0, neg = 0;
  for (int y : labels) (y == 1 ? pos : neg)++;
  if (pos == 0 || neg == 0) fail(ErrorKind::Metric, "ROC AUC requires both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks across ties, accumulate the positive-class rank sum.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }
  const double np = static_cast<double>(pos), nn = static_cast<double>(neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

GroupRates group_rates(std::span<const int> preds, std::span<const int> labels,
                       std::span<const int> groups) {
  const GroupCounts gc = count(preds, labels, groups);
  require_groups_nonempty(gc);
  GroupRates r;
  r.selection_unpriv = static_cast<double>(gc.selected(0)) / static_cast<double>(gc.group_total(0));
  r.selection_priv = static_cast<double>(gc.selected(1)) / static_cast<double>(gc.group_total(1));
  auto rate = [](long long num, long long den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  r.tpr_unpriv = rate(gc.c[0][1][1], gc.positives(0));
  r.tpr_priv = rate(gc.c[1][1][1], gc.positives(1));
  r.fpr_unpriv = rate(gc.c[0][0][1], gc.negatives(0));
  r.fpr_priv = rate(gc.c[1][0][1], gc.negatives(1));
  return r;
}

MetricBundle compute_metrics(std::span<const double> scores,
                             std::span<const int> preds,
                             std::span<const int> labels,
                             std::span<const int> groups) {
  MetricBundle b;
  b.accuracy = accuracy(preds, labels);
  b.balanced_accuracy = balanced_accuracy(preds, labels);
  b.roc_auc = roc_auc(scores, labels);
  b.spd = spd(preds, groups);
  b.di = di(preds, groups);
  b.di_infinite = std::isinf(b.di);
  b.eod = eod(preds, labels, groups);
  b.aod = aod(preds, labels, groups);
  b.rates = group_rates(preds, labels, groups);
  return b;
}

}  // namespace faircompose
