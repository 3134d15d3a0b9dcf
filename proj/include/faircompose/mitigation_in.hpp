#pragma once

#include <memory>
#include <span>
#include <vector>

#include "faircompose/core.hpp"
#include "faircompose/dataset.hpp"
#include "faircompose/models.hpp"

namespace faircompose {

enum class ConstraintKind { DemographicParity, EqualizedOdds };

const char* to_string(ConstraintKind kind);
ConstraintKind parse_constraint(const std::string& name);

struct FairnessConstraint {
  ConstraintKind kind = ConstraintKind::DemographicParity;
  double eps = 0.01;
};

/// DemographicParity: |SPD|. EqualizedOdds: max(|TPR gap|, |FPR gap|).
double constraint_violation(std::span<const int> preds, std::span<const int> labels,
                            std::span<const int> groups, const FairnessConstraint& c);

struct RoundLog {
  double error = 0.0;      // weighted 0-1 error of the round classifier
  double violation = 0.0;  // unsigned constraint violation
  std::vector<double> multipliers;  // after this round's update and projection
};

struct CandidateLog {
  double multiplier = 0.0;
  double error = 0.0;
  double violation = 0.0;
};

/// Mixture of base classifiers produced by a reduction. A deterministic
/// classifier is the single-member case with unit weight.
struct ReductionModel {
  struct Member {
    std::unique_ptr<ScoredClassifier> model;
    double weight = 0.0;
  };
  std::vector<Member> members;
  FairnessConstraint constraint;
  std::vector<RoundLog> rounds;          // expgrad
  std::vector<CandidateLog> candidates;  // gridsearch
  int selected = -1;                     // gridsearch: index into candidates
  bool feasible_found = true;

  /// Mixture-weighted average of member scores.
  std::vector<double> score(const Matrix& x) const;
};

struct ExpGradParams {
  std::size_t max_rounds = 50;
  double eta = 2.0;     // multiplicative step size
  double bound = 100.0; // simplex bound B for the multipliers
};

/// Exponentiated-gradient reduction: each round fits the base learner on
/// Lagrangian-derived costs (realized as weights plus target flips),
/// multipliers update multiplicatively from the round's signed violations,
/// and the result is the uniform mixture over round classifiers. Round one
/// runs with all multipliers at zero, i.e. the unconstrained weighted fit.
ReductionModel expgrad_fit(const ModelFactory& base, const TabularDataset& ds,
                           const FairnessConstraint& constraint,
                           const ExpGradParams& params);

/// 21 evenly spaced multipliers in [-2, 2].
std::vector<double> default_multiplier_grid();

struct GridSearchParams {
  std::vector<double> grid = default_multiplier_grid();
};

/// One cost-sensitive fit per multiplier value; returns the lowest-error
/// candidate whose training violation is within eps, or the
/// minimal-violation candidate flagged via feasible_found=false.
ReductionModel gridsearch_fit(const ModelFactory& base, const TabularDataset& ds,
                              const FairnessConstraint& constraint,
                              const GridSearchParams& params);

}  // namespace faircompose
