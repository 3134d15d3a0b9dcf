#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "faircompose/core.hpp"
#include "faircompose/explain.hpp"

namespace fc = faircompose;

namespace {

fc::TrainStats standard_stats(std::size_t d) {
  fc::TrainStats st;
  st.mean.assign(d, 0.0);
  st.stddev.assign(d, 1.0);
  st.kinds.assign(d, fc::ColumnKind::Continuous);
  st.onehot_group.assign(d, -1);
  st.binary_freq.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) st.names.push_back("f" + std::to_string(j));
  return st;
}

fc::BatchScoreFn sigmoid_model(std::vector<double> coef, double intercept) {
  return [coef = std::move(coef), intercept](const fc::Matrix& x) {
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double z = intercept;
      for (std::size_t j = 0; j < coef.size(); ++j) z += coef[j] * x(i, j);
      out[i] = 1.0 / (1.0 + std::exp(-z));
    }
    return out;
  };
}

fc::BatchScoreFn linear_model(std::vector<double> coef, double intercept) {
  return [coef = std::move(coef), intercept](const fc::Matrix& x) {
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double z = intercept;
      for (std::size_t j = 0; j < coef.size(); ++j) z += coef[j] * x(i, j);
      out[i] = z;
    }
    return out;
  };
}

double weight_of(const fc::Explanation& e, int feature) {
  for (std::size_t k = 0; k < e.feature_index.size(); ++k)
    if (e.feature_index[k] == feature) return e.weights[k];
  return 0.0;
}

}  // namespace

TEST_CASE("planted logistic coefficients (2, 0) dominate correctly") {
  const fc::TrainStats st = standard_stats(2);
  const std::vector<double> instance = {0.3, -0.4};
  fc::LimeParams params;
  const fc::Explanation e =
      fc::lime_explain(sigmoid_model({2.0, 0.0}, 0.0), instance, 0, st, params, 99);
  const double w0 = weight_of(e, 0), w1 = weight_of(e, 1);
  CHECK(w0 > 0.0);
  CHECK(std::fabs(w1) < 0.05 * std::fabs(w0));
  CHECK(e.r2 > 0.5);
}

TEST_CASE("constant score function yields zero attributions and r2 zero") {
  const fc::TrainStats st = standard_stats(3);
  const std::vector<double> instance = {0.0, 1.0, -1.0};
  auto constant = [](const fc::Matrix& x) { return std::vector<double>(x.rows(), 0.7); };
  const fc::Explanation e = fc::lime_explain(constant, instance, 0, st, {}, 5);
  for (double w : e.weights) CHECK(std::fabs(w) < 1e-6);
  CHECK(e.r2 == 0.0);
}

TEST_CASE("identical seeds give bit-identical explanations") {
  const fc::TrainStats st = standard_stats(4);
  const std::vector<double> instance = {0.5, -0.5, 1.0, 0.0};
  const fc::BatchScoreFn fn = sigmoid_model({1.0, -2.0, 0.3, 0.0}, 0.1);
  const fc::Explanation a = fc::lime_explain(fn, instance, 3, st, {}, 1234);
  const fc::Explanation b = fc::lime_explain(fn, instance, 3, st, {}, 1234);
  CHECK(a.weights == b.weights);
  CHECK(a.feature_index == b.feature_index);
  CHECK(a.intercept == b.intercept);
  CHECK(a.r2 == b.r2);
}

TEST_CASE("linear score functions have their signs recovered above 0.5") {
  const std::vector<double> coef = {0.8, -0.6, 0.05, 0.0};
  const fc::TrainStats st = standard_stats(4);
  const std::vector<double> instance = {0.1, 0.2, -0.1, 0.4};
  const fc::Explanation e =
      fc::lime_explain(linear_model(coef, 0.5), instance, 0, st, {}, 7);
  CHECK(weight_of(e, 0) > 0.0);
  CHECK(weight_of(e, 1) < 0.0);
}

TEST_CASE("a feature absent from the model stays below 5% of the top attribution") {
  const fc::TrainStats st = standard_stats(3);
  const std::vector<double> instance = {1.0, -1.0, 0.5};
  const fc::Explanation e =
      fc::lime_explain(sigmoid_model({1.5, 0.7, 0.0}, 0.0), instance, 0, st, {}, 21);
  double top = 0.0;
  for (double w : e.weights) top = std::max(top, std::fabs(w));
  CHECK(std::fabs(weight_of(e, 2)) < 0.05 * top);
}

TEST_CASE("one-hot groups are resampled as valid indicator rows") {
  fc::TrainStats st = standard_stats(4);
  st.kinds[1] = st.kinds[2] = st.kinds[3] = fc::ColumnKind::Binary;
  st.onehot_group[1] = st.onehot_group[2] = st.onehot_group[3] = 0;
  st.binary_freq[1] = 0.2;
  st.binary_freq[2] = 0.5;
  st.binary_freq[3] = 0.3;
  const std::vector<double> instance = {0.0, 0.0, 1.0, 0.0};
  // The score reads the one-hot block; every perturbed row must stay a
  // valid one-hot assignment, so scores stay within the coefficient range.
  auto fn = [](const fc::Matrix& x) {
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const double onehot = x(i, 1) + x(i, 2) + x(i, 3);
      out[i] = onehot == 1.0 ? 0.25 + 0.5 * x(i, 3) : -100.0;
    }
    return out;
  };
  const fc::Explanation e = fc::lime_explain(fn, instance, 0, st, {}, 17);
  for (double w : e.weights) CHECK(std::isfinite(w));
  CHECK(e.r2 > 0.0);  // -100 never appears, the surrogate fits the block
}

TEST_CASE("too-small kernel width is an explanation error") {
  const fc::TrainStats st = standard_stats(2);
  const std::vector<double> instance = {0.0, 0.0};
  fc::LimeParams params;
  params.kernel_width = 1e-300;
  CHECK_THROWS_AS(
      fc::lime_explain(sigmoid_model({1.0, 1.0}, 0.0), instance, 0, st, params, 3),
      fc::Error);
}

TEST_CASE("faithfulness is 1 on proportional drops and -1 on anti-proportional") {
  const std::vector<double> w = {3.0, 2.0, 1.0};
  fc::Explanation expl;
  expl.feature_index = {0, 1, 2};
  expl.names = {"f0", "f1", "f2"};
  expl.weights = w;
  const std::vector<double> instance = {1.0, 1.0, 1.0};
  const std::vector<double> baselines = {0.0, 0.0, 0.0};

  // score = 0.2 + 0.05 * sum(w_j x_j): removing feature j drops 0.05*w_j.
  const fc::FaithfulnessScore pos = fc::faithfulness(
      linear_model({0.05 * w[0], 0.05 * w[1], 0.05 * w[2]}, 0.2), instance, expl, baselines);
  REQUIRE(pos.defined);
  CHECK(std::fabs(pos.value - 1.0) <= 1e-9);

  // score = 0.85 - 0.05 * sum(w_j x_j): drops are anti-proportional.
  const fc::FaithfulnessScore neg = fc::faithfulness(
      linear_model({-0.05 * w[0], -0.05 * w[1], -0.05 * w[2]}, 0.85), instance, expl,
      baselines);
  REQUIRE(neg.defined);
  CHECK(std::fabs(neg.value + 1.0) <= 1e-9);
}

TEST_CASE("faithfulness is scale invariant in the weights") {
  fc::Explanation expl;
  expl.feature_index = {0, 1, 2};
  expl.names = {"f0", "f1", "f2"};
  expl.weights = {0.5, -1.5, 1.0};
  const std::vector<double> instance = {0.4, -0.2, 0.9};
  const std::vector<double> baselines = {0.0, 0.0, 0.0};
  const fc::BatchScoreFn fn = sigmoid_model({1.0, 0.4, -0.8}, 0.2);

  const fc::FaithfulnessScore a = fc::faithfulness(fn, instance, expl, baselines);
  fc::Explanation scaled = expl;
  for (double& w : scaled.weights) w *= 5.0;
  const fc::FaithfulnessScore b = fc::faithfulness(fn, instance, scaled, baselines);
  REQUIRE(a.defined);
  REQUIRE(b.defined);
  CHECK(a.value == doctest::Approx(b.value).epsilon(1e-12));
  CHECK(a.value >= -1.0);
  CHECK(a.value <= 1.0);
}

TEST_CASE("constant model leaves faithfulness undefined") {
  fc::Explanation expl;
  expl.feature_index = {0, 1};
  expl.names = {"f0", "f1"};
  expl.weights = {1.0, 2.0};
  auto constant = [](const fc::Matrix& x) { return std::vector<double>(x.rows(), 0.9); };
  const std::vector<double> instance = {1.0, 2.0};
  const std::vector<double> baselines = {0.0, 0.0};
  const fc::FaithfulnessScore fs = fc::faithfulness(constant, instance, expl, baselines);
  CHECK_FALSE(fs.defined);
}

TEST_CASE("pick_explanation_instances samples deterministically without replacement") {
  const std::vector<std::size_t> all = fc::pick_explanation_instances(10, 10, 3);
  for (std::size_t i = 0; i < 10; ++i) CHECK(all[i] == i);

  const std::vector<std::size_t> a = fc::pick_explanation_instances(100, 10, 5);
  const std::vector<std::size_t> b = fc::pick_explanation_instances(100, 10, 5);
  CHECK(a == b);
  CHECK(a.size() == 10);
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i] > a[i - 1]);

  CHECK_THROWS_AS(fc::pick_explanation_instances(5, 6, 1), fc::Error);
}
