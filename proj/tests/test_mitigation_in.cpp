#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>

#include "faircompose/core.hpp"
#include "faircompose/dataset.hpp"
#include "faircompose/metrics.hpp"
#include "faircompose/mitigation_in.hpp"
#include "faircompose/threshold.hpp"

namespace fc = faircompose;

namespace {

fc::TabularDataset biased_data(std::size_t n, double gap, std::uint64_t seed) {
  fc::SynthSpec spec;
  spec.n = n;
  spec.d = 3;
  spec.label_gap = gap;
  spec.seed = seed;
  fc::TabularDataset ds = fc::synth_biased(spec);
  std::array<fc::TabularDataset*, 0> none = {};
  fc::standardize(ds, none);
  return ds;
}

fc::ModelFactory logistic_factory() { return {"logistic_regression", {}, 0}; }

double abs_spd_at_half(const fc::ReductionModel& m, const fc::TabularDataset& ds) {
  const std::vector<int> preds = fc::apply_threshold(m.score(ds.features), {0.5});
  return std::fabs(fc::spd(preds, ds.groups));
}

}  // namespace

TEST_CASE("constraint violation definitions") {
  // Selection rates 0.4 (unpriv) vs 0.6 (priv): SPD -0.2.
  std::vector<int> preds = {1, 1, 0, 0, 0, 1, 1, 1, 0, 0};
  std::vector<int> labels = {1, 0, 1, 0, 1, 1, 0, 1, 0, 0};
  std::vector<int> groups = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  CHECK(fc::constraint_violation(preds, labels, groups,
                                 {fc::ConstraintKind::DemographicParity, 0.0}) ==
        doctest::Approx(0.2));

  // Equalized odds takes the larger of the TPR/FPR gaps.
  std::vector<int> l2, g2, p2;
  auto cell = [&](int g, int y, int pred, int count) {
    for (int i = 0; i < count; ++i) {
      g2.push_back(g);
      l2.push_back(y);
      p2.push_back(pred);
    }
  };
  // unpriv TPR 0.6, priv TPR 0.5 (gap 0.1); unpriv FPR 0.2, priv FPR 0.5 (gap -0.3)
  cell(0, 1, 1, 6);
  cell(0, 1, 0, 4);
  cell(0, 0, 1, 2);
  cell(0, 0, 0, 8);
  cell(1, 1, 1, 5);
  cell(1, 1, 0, 5);
  cell(1, 0, 1, 5);
  cell(1, 0, 0, 5);
  CHECK(fc::constraint_violation(p2, l2, g2, {fc::ConstraintKind::EqualizedOdds, 0.0}) ==
        doctest::Approx(0.3));

  // Group-symmetric predictions violate nothing.
  std::vector<int> sym_p = {1, 0, 1, 0, 1, 0, 1, 0};
  std::vector<int> sym_l = {1, 0, 0, 1, 1, 0, 0, 1};
  std::vector<int> sym_g = {0, 0, 0, 0, 1, 1, 1, 1};
  CHECK(fc::constraint_violation(sym_p, sym_l, sym_g,
                                 {fc::ConstraintKind::DemographicParity, 0.0}) == 0.0);
  CHECK(fc::constraint_violation(sym_p, sym_l, sym_g,
                                 {fc::ConstraintKind::EqualizedOdds, 0.0}) == 0.0);
}

TEST_CASE("expgrad round one is the unconstrained weighted fit") {
  const fc::TabularDataset ds = biased_data(300, -0.3, 4);
  fc::ExpGradParams p;
  p.max_rounds = 1;
  const fc::ReductionModel red =
      fc::expgrad_fit(logistic_factory(), ds, {fc::ConstraintKind::DemographicParity, 0.01}, p);
  REQUIRE(red.members.size() == 1);
  CHECK(red.members[0].weight == 1.0);

  auto plain = logistic_factory().make();
  plain->fit(ds);
  const std::vector<double> a = red.score(ds.features);
  const std::vector<double> b = plain->score(ds.features);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);  // bit-identical
}

TEST_CASE("expgrad multipliers stay inside the bounded simplex") {
  const fc::TabularDataset ds = biased_data(300, -0.5, 6);
  fc::ExpGradParams p;
  p.max_rounds = 25;
  p.bound = 10.0;
  const fc::ReductionModel red =
      fc::expgrad_fit(logistic_factory(), ds, {fc::ConstraintKind::DemographicParity, 0.01}, p);
  for (const fc::RoundLog& log : red.rounds) {
    double total = 0.0;
    for (double l : log.multipliers) {
      CHECK(l >= 0.0);
      CHECK(l <= 10.0 + 1e-12);
      total += l;
    }
    CHECK(total <= 10.0 + 1e-9);
  }
  // Mixture weights are uniform and sum to one.
  double wsum = 0.0;
  for (const auto& m : red.members) wsum += m.weight;
  CHECK(std::fabs(wsum - 1.0) <= 1e-12);
}

TEST_CASE("already-fair data keeps expgrad close to the unconstrained error") {
  const fc::TabularDataset ds = biased_data(1000, 0.0, 9);
  fc::ExpGradParams p;
  p.max_rounds = 30;
  const fc::ReductionModel red =
      fc::expgrad_fit(logistic_factory(), ds, {fc::ConstraintKind::DemographicParity, 0.02}, p);

  auto plain = logistic_factory().make();
  plain->fit(ds);
  auto err_at_half = [&](const std::vector<double>& scores) {
    const std::vector<int> preds = fc::apply_threshold(scores, {0.5});
    double wrong = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) wrong += preds[i] != ds.labels[i];
    return wrong / static_cast<double>(preds.size());
  };
  const double e_red = err_at_half(red.score(ds.features));
  const double e_plain = err_at_half(plain->score(ds.features));
  CHECK(std::fabs(e_red - e_plain) <= 0.02);
}

TEST_CASE("expgrad reduces the demographic-parity violation on biased data") {
  const fc::TabularDataset ds = biased_data(1500, -0.3, 12);
  auto plain = logistic_factory().make();
  plain->fit(ds);
  const std::vector<int> plain_preds = fc::apply_threshold(plain->score(ds.features), {0.5});
  const double plain_spd = std::fabs(fc::spd(plain_preds, ds.groups));

  fc::ExpGradParams p;
  const fc::ReductionModel red =
      fc::expgrad_fit(logistic_factory(), ds, {fc::ConstraintKind::DemographicParity, 0.01}, p);
  CHECK(abs_spd_at_half(red, ds) < plain_spd);
}

TEST_CASE("expgrad under equalized odds runs and logs rounds") {
  const fc::TabularDataset ds = biased_data(400, -0.3, 15);
  fc::ExpGradParams p;
  p.max_rounds = 10;
  const fc::ReductionModel red =
      fc::expgrad_fit(logistic_factory(), ds, {fc::ConstraintKind::EqualizedOdds, 0.01}, p);
  CHECK(red.rounds.size() == 10);
  for (const fc::RoundLog& log : red.rounds) CHECK(log.multipliers.size() == 4);
}

TEST_CASE("gridsearch multiplier zero matches the unconstrained fit") {
  const fc::TabularDataset ds = biased_data(300, -0.3, 21);
  fc::GridSearchParams p;
  p.grid = {0.0};
  const fc::ReductionModel red =
      fc::gridsearch_fit(logistic_factory(), ds, {fc::ConstraintKind::DemographicParity, 0.01}, p);
  auto plain = logistic_factory().make();
  plain->fit(ds);
  const std::vector<double> a = red.score(ds.features);
  const std::vector<double> b = plain->score(ds.features);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("gridsearch selection agrees with a brute-force re-scan") {
  for (std::uint64_t seed : {31, 32, 33}) {
    const fc::TabularDataset ds = biased_data(400, -0.35, seed);
    const fc::FairnessConstraint c{fc::ConstraintKind::DemographicParity, 0.05};
    const fc::ReductionModel red = fc::gridsearch_fit(logistic_factory(), ds, c, {});
    REQUIRE(!red.candidates.empty());

    int expected = -1;
    for (std::size_t i = 0; i < red.candidates.size(); ++i) {
      if (red.candidates[i].violation > c.eps) continue;
      if (expected < 0 || red.candidates[i].error < red.candidates[expected].error)
        expected = static_cast<int>(i);
    }
    if (expected < 0) {
      for (std::size_t i = 0; i < red.candidates.size(); ++i)
        if (expected < 0 ||
            red.candidates[i].violation < red.candidates[expected].violation)
          expected = static_cast<int>(i);
      CHECK_FALSE(red.feasible_found);
    }
    CHECK(red.selected == expected);
  }
}

TEST_CASE("degenerate single-point grid on unfair data falls back flagged") {
  const fc::TabularDataset ds = biased_data(400, -0.6, 41);
  fc::GridSearchParams p;
  p.grid = {0.0};
  const fc::ReductionModel red = fc::gridsearch_fit(
      logistic_factory(), ds, {fc::ConstraintKind::DemographicParity, 0.01}, p);
  CHECK_FALSE(red.feasible_found);
  CHECK(red.selected == 0);

  fc::GridSearchParams empty;
  empty.grid.clear();
  CHECK_THROWS_AS(fc::gridsearch_fit(logistic_factory(), ds,
                                     {fc::ConstraintKind::DemographicParity, 0.01}, empty),
                  fc::Error);
}

TEST_CASE("gridsearch under equalized odds selects a feasible candidate") {
  const fc::TabularDataset ds = biased_data(500, -0.2, 44);
  const fc::FairnessConstraint c{fc::ConstraintKind::EqualizedOdds, 0.1};
  const fc::ReductionModel red = fc::gridsearch_fit(logistic_factory(), ds, c, {});
  CHECK(red.members.size() == 1);
  CHECK(red.members[0].weight == 1.0);
  if (red.feasible_found)
    CHECK(red.candidates[red.selected].violation <= c.eps);
}

TEST_CASE("reduction score mixes member scores by weight") {
  const fc::TabularDataset da = biased_data(120, -0.2, 51);
  const fc::TabularDataset db = biased_data(120, 0.2, 52);

  fc::ReductionModel two;
  two.members.push_back({logistic_factory().make(), 0.5});
  two.members.push_back({logistic_factory().make(), 0.5});
  two.members[0].model->fit(da.features, da.labels, da.weights);
  two.members[1].model->fit(db.features, db.labels, db.weights);

  const std::vector<double> sa = two.members[0].model->score(da.features);
  const std::vector<double> sb = two.members[1].model->score(da.features);
  const std::vector<double> mixed = two.score(da.features);
  for (std::size_t i = 0; i < mixed.size(); ++i)
    CHECK(mixed[i] == doctest::Approx(0.5 * sa[i] + 0.5 * sb[i]).epsilon(1e-15));

  // Degenerate weights pick out a single member.
  two.members[0].weight = 1.0;
  two.members[1].weight = 0.0;
  const std::vector<double> only_first = two.score(da.features);
  for (std::size_t i = 0; i < only_first.size(); ++i) CHECK(only_first[i] == sa[i]);
}
