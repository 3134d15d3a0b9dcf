#include "faircompose/mitigation_in.hpp"

#include <algorithm>
#include <cmath>

#include "faircompose/metrics.hpp"
#include "faircompose/threshold.hpp"

namespace faircompose {

const char* to_string(ConstraintKind kind) {
  return kind == ConstraintKind::DemographicParity ? "demographic_parity" : "equalized_odds";
}

ConstraintKind parse_constraint(const std::string& name) {
  if (name == "demographic_parity") return ConstraintKind::DemographicParity;
  if (name == "equalized_odds") return ConstraintKind::EqualizedOdds;
  fail(ErrorKind::Config, "unknown constraint '" + name +
                              "' (expected demographic_parity or equalized_odds)");
}

double constraint_violation(std::span<const int> preds, std::span<const int> labels,
                            std::span<const int> groups, const FairnessConstraint& c) {
  if (c.kind == ConstraintKind::DemographicParity) return std::fabs(spd(preds, groups));
  const GroupRates r = group_rates(preds, labels, groups);
  return std::max(std::fabs(r.tpr_unpriv - r.tpr_priv), std::fabs(r.fpr_unpriv - r.fpr_priv));
}

std::vector<double> ReductionModel::score(const Matrix& x) const {
  if (members.empty()) fail(ErrorKind::Fit, "reduction model has no members");
  std::vector<double> out(x.rows(), 0.0);
  for (const Member& m : members) {
    const std::vector<double> s = m.model->score(x);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += m.weight * s[i];
  }
  return out;
}

namespace {

// Per-instance sensitivity of each signed constraint to a favorable
// prediction, times the total weight W so the Lagrangian terms live on the
// same scale as the weighted error term.
struct CostModel {
  // rows: constraints; each entry maps instance -> coefficient
  std::vector<std::vector<double>> sensitivity;
  std::vector<double> base_weights;
  std::vector<int> labels;
  double total_weight = 0.0;

  std::size_t n_constraints() const { return sensitivity.size(); }
};

CostModel build_cost_model(const TabularDataset& ds, const FairnessConstraint& c) {
  const std::size_t n = ds.n();
  CostModel cm;
  cm.base_weights.assign(ds.weights.begin(), ds.weights.end());
  cm.labels = ds.labels;
  for (double w : ds.weights) cm.total_weight += w;

  double n_grp[2] = {0.0, 0.0};
  double n_cell[2][2] = {};  // [group][label]
  for (std::size_t i = 0; i < n; ++i) {
    n_grp[ds.groups[i]] += 1.0;
    n_cell[ds.groups[i]][ds.labels[i]] += 1.0;
  }
  if (n_grp[0] == 0.0 || n_grp[1] == 0.0)
    fail(ErrorKind::Fit, "reduction requires both protected groups in training data");

  if (c.kind == ConstraintKind::DemographicParity) {
    // Signed pair: spd - eps <= 0 and -spd - eps <= 0.
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i)
      s[i] = ds.groups[i] == 0 ? 1.0 / n_grp[0] : -1.0 / n_grp[1];
    cm.sensitivity.push_back(s);
    for (double& v : s) v = -v;
    cm.sensitivity.push_back(std::move(s));
  } else {
    for (int y = 1; y >= 0; --y) {  // TPR gap then FPR gap
      if (n_cell[0][y] == 0.0 || n_cell[1][y] == 0.0)
        fail(ErrorKind::Fit, std::string("equalized odds needs ") +
                                 (y == 1 ? "positive" : "negative") +
                                 "-label instances in both groups");
      std::vector<double> s(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (ds.labels[i] != y) continue;
        s[i] = ds.groups[i] == 0 ? 1.0 / n_cell[0][y] : -1.0 / n_cell[1][y];
      }
      cm.sensitivity.push_back(s);
      for (double& v : s) v = -v;
      cm.sensitivity.push_back(std::move(s));
    }
  }
  return cm;
}

// Signed violations g_c(h) = gap_c - eps for the four (or two) one-sided
// constraints, evaluated on hard predictions.
std::vector<double> signed_violations(const CostModel& cm, std::span<const int> preds,
                                      double eps) {
  std::vector<double> g(cm.n_constraints(), -eps);
  for (std::size_t c = 0; c < cm.n_constraints(); ++c) {
    const std::vector<double>& s = cm.sensitivity[c];
    for (std::size_t i = 0; i < preds.size(); ++i)
      if (preds[i] == 1) g[c] += s[i];
  }
  return g;
}

// Reduction to weighted binary classification: the cost difference of
// predicting favorable vs unfavorable becomes a target flip plus a weight.
void lagrangian_costs(const CostModel& cm, std::span<const double> lambda,
                      std::vector<int>* targets, std::vector<double>* weights) {
  const std::size_t n = cm.base_weights.size();
  targets->resize(n);
  weights->resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double delta = cm.labels[i] == 1 ? -cm.base_weights[i] : cm.base_weights[i];
    for (std::size_t c = 0; c < cm.n_constraints(); ++c)
      delta += cm.total_weight * lambda[c] * cm.sensitivity[c][i];
    if (delta < 0.0) {
      (*targets)[i] = 1;
      (*weights)[i] = -delta;
    } else {
      (*targets)[i] = 0;
      (*weights)[i] = delta;
    }
  }
}

double weighted_error(std::span<const int> preds, std::span<const int> labels,
                      std::span<const double> weights, double total_weight) {
  double err = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] != labels[i]) err += weights[i];
  return err / total_weight;
}

}  // namespace

std::vector<double> default_multiplier_grid() {
  std::vector<double> grid;
  grid.reserve(21);
  for (int i = 0; i < 21; ++i) grid.push_back(-2.0 + 0.2 * i);
  return grid;
}

ReductionModel expgrad_fit(const ModelFactory& base, const TabularDataset& ds,
                           const FairnessConstraint& constraint,
                           const ExpGradParams& params) {
  if (params.max_rounds < 1) fail(ErrorKind::Parameter, "expgrad needs max_rounds >= 1");
  const CostModel cm = build_cost_model(ds, constraint);

  ReductionModel model;
  model.constraint = constraint;

  std::vector<double> lambda(cm.n_constraints(), 0.0);
  std::vector<int> targets;
  std::vector<double> weights;
  for (std::size_t round = 1; round <= params.max_rounds; ++round) {
    lagrangian_costs(cm, lambda, &targets, &weights);
    std::unique_ptr<ScoredClassifier> h = base.make();
    try {
      h->fit(ds.features, targets, weights);
    } catch (const Error& e) {
      fail(ErrorKind::Fit, "expgrad round " + std::to_string(round) + ": " + e.what());
    }
    const std::vector<int> preds = apply_threshold(h->score(ds.features), {0.5});
    const std::vector<double> g = signed_violations(cm, preds, constraint.eps);
    model.rounds.push_back({weighted_error(preds, ds.labels, ds.weights, cm.total_weight),
                            constraint_violation(preds, ds.labels, ds.groups, constraint)});
    model.members.push_back({std::move(h), 0.0});

    // Multiplicative update: the first update starts from unit multipliers
    // since round one deliberately runs unconstrained from zero.
    double total = 0.0;
    for (std::size_t c = 0; c < lambda.size(); ++c) {
      const double prev = round == 1 ? 1.0 : lambda[c];
      lambda[c] = prev * std::exp(params.eta * g[c]);
      total += lambda[c];
    }
    if (total > params.bound) {
      const double scale = params.bound / total;
      for (double& l : lambda) l *= scale;
    }
    model.rounds.back().multipliers = lambda;
  }

  const double uniform = 1.0 / static_cast<double>(model.members.size());
  for (auto& m : model.members) m.weight = uniform;
  return model;
}

ReductionModel gridsearch_fit(const ModelFactory& base, const TabularDataset& ds,
                              const FairnessConstraint& constraint,
                              const GridSearchParams& params) {
  const std::vector<double>& grid = params.grid;
  if (grid.empty()) fail(ErrorKind::Parameter, "gridsearch multiplier grid is empty");
  const CostModel cm = build_cost_model(ds, constraint);

  ReductionModel model;
  model.constraint = constraint;

  // For equalized odds a single signed multiplier drives the TPR and FPR
  // terms together; the signed pairs live at indices (0,1) and (2,3).
  std::vector<std::unique_ptr<ScoredClassifier>> fits;
  std::vector<int> targets;
  std::vector<double> weights;
  std::vector<double> lambda(cm.n_constraints(), 0.0);
  for (double mult : grid) {
    for (std::size_t c = 0; c < cm.n_constraints(); c += 2) {
      lambda[c] = mult >= 0.0 ? mult : 0.0;
      lambda[c + 1] = mult < 0.0 ? -mult : 0.0;
    }
    lagrangian_costs(cm, lambda, &targets, &weights);
    std::unique_ptr<ScoredClassifier> h = base.make();
    try {
      h->fit(ds.features, targets, weights);
    } catch (const Error& e) {
      fail(ErrorKind::Fit,
           "gridsearch multiplier " + format_double(mult) + ": " + e.what());
    }
    const std::vector<int> preds = apply_threshold(h->score(ds.features), {0.5});
    model.candidates.push_back(
        {mult, weighted_error(preds, ds.labels, ds.weights, cm.total_weight),
         constraint_violation(preds, ds.labels, ds.groups, constraint)});
    fits.push_back(std::move(h));
  }

  int best = -1;
  for (std::size_t i = 0; i < model.candidates.size(); ++i) {
    const CandidateLog& c = model.candidates[i];
    if (c.violation > constraint.eps) continue;
    if (best < 0 || c.error < model.candidates[best].error) best = static_cast<int>(i);
  }
  if (best < 0) {
    model.feasible_found = false;
    for (std::size_t i = 0; i < model.candidates.size(); ++i)
      if (best < 0 || model.candidates[i].violation < model.candidates[best].violation)
        best = static_cast<int>(i);
  }
  model.selected = best;
  model.members.push_back({std::move(fits[best]), 1.0});
  return model;
}

}  // namespace faircompose
