#include "faircompose/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "faircompose/kernels.hpp"

namespace faircompose {

TrainStats compute_train_stats(const TabularDataset& train) {
  const std::size_t n = train.n(), d = train.dim();
  if (n == 0) fail(ErrorKind::Explanation, "train statistics need a nonempty split");
  TrainStats st;
  st.kinds = train.column_kinds;
  st.onehot_group = train.onehot_group;
  st.names = train.feature_names;
  st.mean.assign(d, 0.0);
  st.stddev.assign(d, 0.0);
  st.binary_freq.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += train.features(i, j);
    mean /= static_cast<double>(n);
    st.mean[j] = mean;
    if (train.column_kinds[j] == ColumnKind::Binary) {
      st.binary_freq[j] = mean;
      continue;
    }
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dv = train.features(i, j) - mean;
      var += dv * dv;
    }
    st.stddev[j] = std::sqrt(var / static_cast<double>(n));
  }
  return st;
}

namespace {

// Draws one perturbed row. One-hot groups are resampled as a whole from the
// empirical level frequencies; standalone binary columns as Bernoulli draws.
void perturb_row(std::span<const double> instance, const TrainStats& st, Rng& rng,
                 std::span<double> out) {
  const std::size_t d = instance.size();
  int handled_group = -2;
  for (std::size_t j = 0; j < d; ++j) {
    const int grp = st.onehot_group[j];
    if (st.kinds[j] == ColumnKind::Continuous) {
      out[j] = instance[j] + rng.gaussian() * st.stddev[j];
    } else if (grp < 0) {
      out[j] = rng.uniform01() < st.binary_freq[j] ? 1.0 : 0.0;
    } else if (grp != handled_group) {
      handled_group = grp;
      // Resample the whole group with one draw proportional to frequencies.
      double total = 0.0;
      std::size_t end = j;
      while (end < d && st.onehot_group[end] == grp) total += st.binary_freq[end], ++end;
      double u = rng.uniform01() * std::max(total, 1e-300);
      std::size_t chosen = end - 1;
      double acc = 0.0;
      for (std::size_t c = j; c < end; ++c) {
        acc += st.binary_freq[c];
        if (u < acc) {
          chosen = c;
          break;
        }
      }
      for (std::size_t c = j; c < end; ++c) out[c] = c == chosen ? 1.0 : 0.0;
    }
  }
}

}  // namespace

Explanation lime_explain(const BatchScoreFn& model, std::span<const double> instance,
                         std::size_t instance_id, const TrainStats& stats,
                         const LimeParams& params, std::uint64_t seed) {
  const std::size_t d = instance.size();
  if (d != stats.kinds.size())
    fail(ErrorKind::Explanation, "instance width does not match train statistics");
  if (params.num_samples < 2)
    fail(ErrorKind::Explanation, "lime needs at least 2 perturbation samples");
  const double sigma = params.kernel_width > 0.0
                           ? params.kernel_width
                           : 0.75 * std::sqrt(static_cast<double>(d));

  Rng rng(seed);
  Matrix samples(params.num_samples, d);
  for (std::size_t s = 0; s < params.num_samples; ++s)
    perturb_row(instance, stats, rng, samples.row_span(s));

  const std::vector<double> target = model(samples);
  if (target.size() != params.num_samples)
    fail(ErrorKind::Explanation, "score function returned a wrong-sized batch");

  std::vector<double> kw(params.num_samples);
  double kw_total = 0.0;
  for (std::size_t s = 0; s < params.num_samples; ++s) {
    const double d2 = kernels::sq_dist(samples.row_span(s), instance);
    kw[s] = std::exp(-d2 / (sigma * sigma));
    kw_total += kw[s];
  }
  if (kw_total <= 0.0)
    fail(ErrorKind::Explanation, "all kernel weights underflowed; increase kernel_width");

  // Weighted ridge on [features, 1]; the intercept column is unpenalized.
  const std::size_t p = d + 1;
  Matrix gram(p, p);
  std::vector<double> rhs(p, 0.0);
  std::vector<double> row(p);
  for (std::size_t s = 0; s < params.num_samples; ++s) {
    std::copy_n(samples.row(s), d, row.data());
    row[d] = 1.0;
    for (std::size_t j = 0; j < p; ++j) {
      const double c = kw[s] * row[j];
      kernels::axpy(c, row, gram.row_span(j));
      rhs[j] += c * target[s];
    }
  }
  for (std::size_t j = 0; j < d; ++j) gram(j, j) += 1.0;  // ridge 1.0
  gram(d, d) += 1e-12;  // keeps the factorization definite for zero weights
  const std::vector<double> beta = cholesky_solve(std::move(gram), std::move(rhs));

  // Weighted R^2 of the surrogate over the perturbation sample.
  double ybar = 0.0;
  for (std::size_t s = 0; s < params.num_samples; ++s) ybar += kw[s] * target[s];
  ybar /= kw_total;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t s = 0; s < params.num_samples; ++s) {
    const double fit =
        kernels::dot(samples.row_span(s), std::span<const double>(beta.data(), d)) + beta[d];
    ss_res += kw[s] * (target[s] - fit) * (target[s] - fit);
    ss_tot += kw[s] * (target[s] - ybar) * (target[s] - ybar);
  }

  Explanation expl;
  expl.instance_id = instance_id;
  expl.seed = seed;
  expl.intercept = beta[d];
  expl.r2 = ss_tot > 1e-18 ? 1.0 - ss_res / ss_tot : 0.0;

  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ma = std::fabs(beta[a]), mb = std::fabs(beta[b]);
    return ma > mb || (ma == mb && a < b);
  });
  const std::size_t keep = std::min<std::size_t>(params.top_k, d);
  for (std::size_t k = 0; k < keep; ++k) {
    expl.feature_index.push_back(order[k]);
    expl.names.push_back(stats.names[order[k]]);
    expl.weights.push_back(beta[order[k]]);
  }
  return expl;
}

FaithfulnessScore faithfulness(const BatchScoreFn& model, std::span<const double> instance,
                               const Explanation& explanation,
                               std::span<const double> baselines) {
  const std::size_t k = explanation.feature_index.size();
  FaithfulnessScore fs;
  if (k == 0) return fs;
  for (int idx : explanation.feature_index)
    if (idx < 0 || static_cast<std::size_t>(idx) >= baselines.size())
      fail(ErrorKind::Explanation, "baseline missing for an explained feature");

  // Row 0: the instance; row 1+j: feature j replaced by its baseline.
  Matrix batch(k + 1, instance.size());
  for (std::size_t r = 0; r <= k; ++r)
    std::copy_n(instance.data(), instance.size(), batch.row(r));
  for (std::size_t j = 0; j < k; ++j)
    batch(j + 1, explanation.feature_index[j]) = baselines[explanation.feature_index[j]];

  const std::vector<double> scores = model(batch);
  const bool favorable = scores[0] >= 0.5;
  auto class_score = [&](double s) { return favorable ? s : 1.0 - s; };

  fs.weights = explanation.weights;
  fs.drops.resize(k);
  for (std::size_t j = 0; j < k; ++j)
    fs.drops[j] = class_score(scores[0]) - class_score(scores[j + 1]);

  double value = 0.0;
  if (pearson(fs.weights, fs.drops, &value)) {
    fs.value = value;
    fs.defined = true;
  }
  return fs;
}

std::vector<std::size_t> pick_explanation_instances(std::size_t n_test, std::size_t count,
                                                    std::uint64_t seed) {
  if (count > n_test)
    fail(ErrorKind::Parameter, "cannot pick " + std::to_string(count) +
                                   " explanation instances from " + std::to_string(n_test));
  std::vector<std::size_t> idx(n_test);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.bounded(n_test - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace faircompose
