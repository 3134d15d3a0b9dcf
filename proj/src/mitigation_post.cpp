#include "faircompose/mitigation_post.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "faircompose/metrics.hpp"

namespace faircompose {

namespace {

std::vector<double> centi_grid(int lo, int hi) {
  std::vector<double> g;
  g.reserve(hi - lo + 1);
  for (int i = lo; i <= hi; ++i) g.push_back(i * 0.01);
  return g;
}

}  // namespace

RocBand roc_fit(std::span<const double> scores, std::span<const int> labels,
                std::span<const int> groups, double di_low, double di_high) {
  if (!(di_low > 0.0) || !(di_high > di_low))
    fail(ErrorKind::Parameter, "reject-option DI bounds must satisfy 0 < low < high");
  const std::vector<double> thresholds = centi_grid(1, 99);
  const std::vector<double> margins = centi_grid(1, 25);

  RocBand best;
  bool have_feasible = false, have_any = false;
  double best_bacc = -1.0, best_dist = 0.0;
  RocBand fallback;

  for (double m : margins) {
    for (double t : thresholds) {
      RocBand band{t, m, di_low, di_high, true};
      const std::vector<int> preds = roc_apply(scores, groups, band);
      const double d = di(preds, groups);
      const double bacc = balanced_accuracy(preds, labels);
      const bool ok = !std::isinf(d) && d >= di_low && d <= di_high;
      if (ok && bacc > best_bacc) {
        best_bacc = bacc;
        best = band;
        have_feasible = true;
      }
      const double dist = std::isinf(d) ? std::numeric_limits<double>::infinity()
                                        : std::fabs(d - 1.0);
      if (!have_any || dist < best_dist) {
        best_dist = dist;
        fallback = band;
        have_any = true;
      }
    }
  }
  if (have_feasible) return best;
  fallback.feasible = false;
  return fallback;
}

std::vector<int> roc_apply(std::span<const double> scores, std::span<const int> groups,
                           const RocBand& band) {
  std::vector<int> preds(scores.size());
  const double lo = band.threshold - band.margin, hi = band.threshold + band.margin;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = scores[i];
    if (s >= lo && s <= hi)
      preds[i] = groups[i] == 0 ? 1 : 0;
    else
      preds[i] = s >= band.threshold ? 1 : 0;
  }
  return preds;
}

const char* to_string(CostMode mode) {
  switch (mode) {
    case CostMode::Fpr: return "fpr";
    case CostMode::Fnr: return "fnr";
    case CostMode::Weighted: return "weighted";
  }
  return "weighted";
}

CostMode parse_cost_mode(const std::string& name) {
  if (name == "fpr") return CostMode::Fpr;
  if (name == "fnr") return CostMode::Fnr;
  if (name == "weighted") return CostMode::Weighted;
  fail(ErrorKind::Config, "unknown cost mode '" + name + "' (expected fpr, fnr, weighted)");
}

namespace {

// Group instances sorted by closeness of the score to the group base rate;
// the first k of this order are the ones a mix level p flags.
struct GroupOrder {
  std::vector<std::size_t> order;
  // prefix counts/sums along the order
  std::vector<double> cnt0, cnt1, sum0, sum1, err_keep;
  double n0 = 0.0, n1 = 0.0;
};

GroupOrder build_group_order(std::span<const double> scores, std::span<const int> labels,
                             std::span<const int> groups, int g, double base_rate,
                             double threshold) {
  GroupOrder go;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (groups[i] == g) go.order.push_back(i);
  std::sort(go.order.begin(), go.order.end(), [&](std::size_t a, std::size_t b) {
    const double da = std::fabs(scores[a] - base_rate), db = std::fabs(scores[b] - base_rate);
    return da < db || (da == db && a < b);
  });
  const std::size_t n = go.order.size();
  go.cnt0.assign(n + 1, 0.0);
  go.cnt1.assign(n + 1, 0.0);
  go.sum0.assign(n + 1, 0.0);
  go.sum1.assign(n + 1, 0.0);
  go.err_keep.assign(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = go.order[k];
    const int y = labels[i];
    go.cnt0[k + 1] = go.cnt0[k] + (y == 0);
    go.cnt1[k + 1] = go.cnt1[k] + (y == 1);
    go.sum0[k + 1] = go.sum0[k] + (y == 0 ? scores[i] : 0.0);
    go.sum1[k + 1] = go.sum1[k] + (y == 1 ? scores[i] : 0.0);
    const int pred = scores[i] >= threshold ? 1 : 0;
    go.err_keep[k + 1] = go.err_keep[k] + (pred != y);
  }
  go.n0 = go.cnt0[n];
  go.n1 = go.cnt1[n];
  return go;
}

struct GroupEval {
  double gfpr, gfnr, errors;
};

GroupEval eval_group_mix(const GroupOrder& go, std::size_t k, double base_rate,
                         double threshold) {
  const std::size_t n = go.order.size();
  // Flagged instances score exactly the base rate; the rest keep their score.
  const double fpr_num = base_rate * go.cnt0[k] + (go.sum0[n] - go.sum0[k]);
  const double fnr_num = (1.0 - base_rate) * go.cnt1[k] +
                         ((go.cnt1[n] - go.cnt1[k]) - (go.sum1[n] - go.sum1[k]));
  const int pred_br = base_rate >= threshold ? 1 : 0;
  const double err_flagged = pred_br == 1 ? go.cnt0[k] : go.cnt1[k];
  GroupEval ev;
  ev.gfpr = go.n0 > 0.0 ? fpr_num / go.n0 : 0.0;
  ev.gfnr = go.n1 > 0.0 ? fnr_num / go.n1 : 0.0;
  ev.errors = err_flagged + (go.err_keep[n] - go.err_keep[k]);
  return ev;
}

double cost_of(const GroupEval& ev, CostMode mode) {
  switch (mode) {
    case CostMode::Fpr: return ev.gfpr;
    case CostMode::Fnr: return ev.gfnr;
    case CostMode::Weighted: return ev.gfpr + ev.gfnr;
  }
  return 0.0;
}

std::size_t mix_count(double p, std::size_t group_size) {
  return static_cast<std::size_t>(std::llround(p * static_cast<double>(group_size)));
}

}  // namespace

CeoMix ceodds_fit(std::span<const double> scores, std::span<const int> labels,
                  std::span<const int> groups, CostMode mode, double threshold,
                  double cost_tol) {
  double n_grp[2] = {0.0, 0.0}, sum_y[2] = {0.0, 0.0}, sum_s[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int g = groups[i];
    n_grp[g] += 1.0;
    sum_y[g] += labels[i];
    sum_s[g] += scores[i];
  }
  if (n_grp[0] == 0.0 || n_grp[1] == 0.0)
    fail(ErrorKind::Fit, "calibrated odds requires both groups in validation data");

  CeoMix mix;
  mix.mode = mode;
  mix.threshold = threshold;
  mix.base_rate_unpriv = sum_y[0] / n_grp[0];
  mix.base_rate_priv = sum_y[1] / n_grp[1];
  // Loose calibration check; the method assumes scores approximate base rates.
  mix.calibration_warning =
      std::fabs(sum_s[0] / n_grp[0] - mix.base_rate_unpriv) > 0.1 ||
      std::fabs(sum_s[1] / n_grp[1] - mix.base_rate_priv) > 0.1;

  const GroupOrder go_u =
      build_group_order(scores, labels, groups, 0, mix.base_rate_unpriv, threshold);
  const GroupOrder go_p =
      build_group_order(scores, labels, groups, 1, mix.base_rate_priv, threshold);
  if (mode != CostMode::Fnr && (go_u.n0 == 0.0 || go_p.n0 == 0.0))
    fail(ErrorKind::Fit, "fpr cost undefined: a group has no negative-label instances");
  if (mode != CostMode::Fpr && (go_u.n1 == 0.0 || go_p.n1 == 0.0))
    fail(ErrorKind::Fit, "fnr cost undefined: a group has no positive-label instances");

  const double n = static_cast<double>(scores.size());
  bool found = false;
  double best_err = 0.0;
  for (int pp = 0; pp <= 100; ++pp) {
    const double p_priv = pp * 0.01;
    const GroupEval ev_p =
        eval_group_mix(go_p, mix_count(p_priv, go_p.order.size()), mix.base_rate_priv, threshold);
    for (int pu = 0; pu <= 100; ++pu) {
      const double p_unpriv = pu * 0.01;
      const GroupEval ev_u = eval_group_mix(go_u, mix_count(p_unpriv, go_u.order.size()),
                                            mix.base_rate_unpriv, threshold);
      const double gap = std::fabs(cost_of(ev_u, mode) - cost_of(ev_p, mode));
      if (gap > cost_tol) continue;
      const double err = (ev_u.errors + ev_p.errors) / n;
      if (!found || err < best_err) {
        found = true;
        best_err = err;
        mix.p_priv = p_priv;
        mix.p_unpriv = p_unpriv;
      }
    }
  }
  if (!found)
    fail(ErrorKind::Fit, "calibrated odds could not equalize the " +
                             std::string(to_string(mode)) + " cost across groups within " +
                             format_double(cost_tol));
  return mix;
}

std::vector<double> ceodds_mix_scores(std::span<const double> scores,
                                      std::span<const int> groups, const CeoMix& mix) {
  std::vector<double> mixed(scores.begin(), scores.end());
  for (int g = 0; g < 2; ++g) {
    const double br = g == 0 ? mix.base_rate_unpriv : mix.base_rate_priv;
    const double p = g == 0 ? mix.p_unpriv : mix.p_priv;
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (groups[i] == g) members.push_back(i);
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      const double da = std::fabs(scores[a] - br), db = std::fabs(scores[b] - br);
      return da < db || (da == db && a < b);
    });
    const std::size_t k = mix_count(p, members.size());
    for (std::size_t j = 0; j < k; ++j) mixed[members[j]] = br;
  }
  return mixed;
}

std::vector<int> ceodds_apply(std::span<const double> scores,
                              std::span<const int> groups, const CeoMix& mix) {
  const std::vector<double> mixed = ceodds_mix_scores(scores, groups, mix);
  std::vector<int> preds(mixed.size());
  for (std::size_t i = 0; i < mixed.size(); ++i)
    preds[i] = mixed[i] >= mix.threshold ? 1 : 0;
  return preds;
}

GroupThresholds threshopt_fit(std::span<const double> scores, std::span<const int> labels,
                              std::span<const int> groups, ConstraintKind constraint,
                              double tol) {
  if (tol < 0.0) fail(ErrorKind::Parameter, "threshold optimizer tolerance must be >= 0");
  const std::vector<double> grid = centi_grid(1, 99);
  const std::size_t g = grid.size();

  // Per group and grid point: selected count, true positives, false positives.
  struct Counts {
    std::vector<double> sel, tp, fp;
    double n = 0.0, pos = 0.0, neg = 0.0;
  };
  Counts cnt[2];
  for (int grp = 0; grp < 2; ++grp) {
    cnt[grp].sel.assign(g, 0.0);
    cnt[grp].tp.assign(g, 0.0);
    cnt[grp].fp.assign(g, 0.0);
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    Counts& c = cnt[groups[i]];
    c.n += 1.0;
    (labels[i] == 1 ? c.pos : c.neg) += 1.0;
    for (std::size_t t = 0; t < g; ++t) {
      if (scores[i] >= grid[t]) {
        c.sel[t] += 1.0;
        (labels[i] == 1 ? c.tp[t] : c.fp[t]) += 1.0;
      }
    }
  }
  if (cnt[0].n == 0.0 || cnt[1].n == 0.0)
    fail(ErrorKind::Fit, "threshold optimizer requires both groups");
  if (constraint == ConstraintKind::EqualizedOdds)
    for (int grp = 0; grp < 2; ++grp)
      if (cnt[grp].pos == 0.0 || cnt[grp].neg == 0.0)
        fail(ErrorKind::Fit, "equalized odds needs both label classes in each group");
  const double pos = cnt[0].pos + cnt[1].pos, neg = cnt[0].neg + cnt[1].neg;
  if (pos == 0.0 || neg == 0.0)
    fail(ErrorKind::Fit, "threshold optimizer requires both label classes");

  GroupThresholds best;
  best.constraint = constraint;
  bool have_feasible = false, have_any = false;
  double best_bacc = -1.0, min_gap = 0.0;
  GroupThresholds fallback = best;

  for (std::size_t tu = 0; tu < g; ++tu) {
    for (std::size_t tp = 0; tp < g; ++tp) {
      double gap;
      if (constraint == ConstraintKind::DemographicParity) {
        gap = std::fabs(cnt[0].sel[tu] / cnt[0].n - cnt[1].sel[tp] / cnt[1].n);
      } else {
        const double tpr_gap = cnt[0].tp[tu] / cnt[0].pos - cnt[1].tp[tp] / cnt[1].pos;
        const double fpr_gap = cnt[0].fp[tu] / cnt[0].neg - cnt[1].fp[tp] / cnt[1].neg;
        gap = std::max(std::fabs(tpr_gap), std::fabs(fpr_gap));
      }
      const double tpr = (cnt[0].tp[tu] + cnt[1].tp[tp]) / pos;
      const double tnr = (neg - cnt[0].fp[tu] - cnt[1].fp[tp]) / neg;
      const double bacc = (tpr + tnr) / 2.0;
      if (gap <= tol && bacc > best_bacc) {
        best_bacc = bacc;
        best.t_unpriv = grid[tu];
        best.t_priv = grid[tp];
        best.achieved_gap = gap;
        have_feasible = true;
      }
      if (!have_any || gap < min_gap) {
        min_gap = gap;
        fallback.t_unpriv = grid[tu];
        fallback.t_priv = grid[tp];
        fallback.achieved_gap = gap;
        have_any = true;
      }
    }
  }
  if (have_feasible) return best;
  fallback.feasible = false;
  return fallback;
}

std::vector<int> threshopt_apply(std::span<const double> scores,
                                 std::span<const int> groups, const GroupThresholds& gt) {
  std::vector<int> preds(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double t = groups[i] == 0 ? gt.t_unpriv : gt.t_priv;
    preds[i] = scores[i] >= t ? 1 : 0;
  }
  return preds;
}

}  // namespace faircompose
