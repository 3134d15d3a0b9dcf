#include "faircompose/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "faircompose/kernels.hpp"

namespace faircompose {

void ScoredClassifier::fit(const Matrix& x, std::span<const int> y,
                           std::span<const double> w) {
  if (x.rows() == 0) fail(ErrorKind::Fit, "cannot fit on an empty dataset");
  if (y.size() != x.rows() || w.size() != x.rows())
    fail(ErrorKind::Fit, "feature, label, and weight lengths differ");
  double wpos = 0.0, wneg = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (w[i] < 0.0) fail(ErrorKind::Fit, "negative instance weight");
    (y[i] == 1 ? wpos : wneg) += w[i];
  }
  if (wpos <= 0.0 || wneg <= 0.0)
    fail(ErrorKind::Fit, "single-class data: both classes need positive total weight");
  do_fit(x, y, w);
  fitted_ = true;
}

std::vector<double> ScoredClassifier::score(const Matrix& x) const {
  if (!fitted_) fail(ErrorKind::Fit, "score called before fit");
  return do_score(x);
}

namespace {

Hyperparams merge_hyperparams(const std::string& kind, const Hyperparams& defaults,
                              const Hyperparams& user) {
  Hyperparams hp = defaults;
  for (const auto& [key, value] : user) {
    auto it = hp.find(key);
    if (it == hp.end())
      fail(ErrorKind::Config, "unknown hyperparameter '" + key + "' for model '" + kind + "'");
    it->second = value;
  }
  return hp;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  if (z > 0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

// ---------------------------------------------------------------------------
// Logistic regression, full-batch gradient descent with backtracking.
// ---------------------------------------------------------------------------

class LogisticModel final : public ScoredClassifier {
 public:
  LogisticModel(Hyperparams hp) : ScoredClassifier("logistic_regression", std::move(hp)) {}

  std::unique_ptr<ScoredClassifier> fresh() const override {
    return std::make_unique<LogisticModel>(hp_);
  }

  const LogisticCoefficients& coefficients() const { return fit_; }

 protected:
  void do_fit(const Matrix& x, std::span<const int> y, std::span<const double> w) override {
    const std::size_t n = x.rows(), d = x.cols();
    const double l2 = hp_.at("l2_strength");
    const double tol = hp_.at("tolerance");
    const auto max_iters = static_cast<std::size_t>(hp_.at("max_iters"));

    std::vector<double> params(d + 1, 0.0);
    std::vector<double> grad, trial(d + 1);
    double loss = logistic_loss_grad(x, y, w, l2, params, &grad);
    double step = 1.0;
    std::size_t iter = 0;
    for (; iter < max_iters; ++iter) {
      const double gmax = kernels::max_abs(grad);
      if (gmax < tol) break;
      const double gnorm2 = kernels::dot(grad, grad);
      // Armijo backtracking along the negative gradient.
      step = std::min(step * 2.0, 1e6);
      bool accepted = false;
      for (int half = 0; half < 60; ++half) {
        for (std::size_t j = 0; j <= d; ++j) trial[j] = params[j] - step * grad[j];
        const double trial_loss = logistic_loss_grad(x, y, w, l2, trial, nullptr);
        if (std::isfinite(trial_loss) && trial_loss <= loss - 1e-4 * step * gnorm2) {
          params.swap(trial);
          loss = trial_loss;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;  // no further progress at machine precision
      loss = logistic_loss_grad(x, y, w, l2, params, &grad);
    }

    fit_.coef.assign(params.begin(), params.begin() + d);
    fit_.intercept = params[d];
    logistic_loss_grad(x, y, w, l2, params, &grad);
    fit_.grad_max_norm = kernels::max_abs(grad);
    fit_.iterations = iter;
  }

  std::vector<double> do_score(const Matrix& x) const override {
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i)
      out[i] = sigmoid(kernels::dot(x.row_span(i), fit_.coef) + fit_.intercept);
    return out;
  }

 private:
  LogisticCoefficients fit_;
};

// ---------------------------------------------------------------------------
// CART decision tree, weighted Gini.
// ---------------------------------------------------------------------------

struct TreeNode {
  int feature = -1;  // -1: leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  double score = 0.0;
};

struct TreeConfig {
  std::size_t max_depth = 5;
  double min_leaf_weight = 0.0;
  std::size_t mtry = 0;  // 0: all features
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const int> y, std::span<const double> w,
              const TreeConfig& cfg, Rng* rng)
      : x_(x), y_(y), w_(w), cfg_(cfg), rng_(rng) {}

  int build(std::vector<std::size_t>& rows, std::size_t depth, std::vector<TreeNode>& nodes) {
    double wsum = 0.0, wpos = 0.0;
    for (std::size_t i : rows) {
      wsum += w_[i];
      wpos += w_[i] * y_[i];
    }
    TreeNode node;
    node.score = wsum > 0.0 ? wpos / wsum : 0.0;

    bool pure = true;
    for (std::size_t k = 1; k < rows.size(); ++k)
      if (y_[rows[k]] != y_[rows[0]]) {
        pure = false;
        break;
      }

    int best_feature = -1;
    double best_threshold = 0.0, best_impurity = 0.0;
    if (depth < cfg_.max_depth && !pure && wsum >= 2.0 * cfg_.min_leaf_weight)
      find_best_split(rows, wsum, wpos, &best_feature, &best_threshold, &best_impurity);

    const int id = static_cast<int>(nodes.size());
    nodes.push_back(node);
    if (best_feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t i : rows)
      (x_(i, best_feature) < best_threshold ? left : right).push_back(i);
    nodes[id].feature = best_feature;
    nodes[id].threshold = best_threshold;
    nodes[id].left = build(left, depth + 1, nodes);
    nodes[id].right = build(right, depth + 1, nodes);
    return id;
  }

 private:
  void find_best_split(const std::vector<std::size_t>& rows, double wsum, double wpos,
                       int* best_feature, double* best_threshold, double* best_impurity) const {
    const std::size_t d = x_.cols();
    std::vector<std::size_t> features(d);
    std::iota(features.begin(), features.end(), 0);
    if (cfg_.mtry > 0 && cfg_.mtry < d && rng_) {
      for (std::size_t i = 0; i < cfg_.mtry; ++i) {
        const std::size_t j = i + rng_->bounded(d - i);
        std::swap(features[i], features[j]);
      }
      features.resize(cfg_.mtry);
      std::sort(features.begin(), features.end());
    }

    auto gini = [](double wl, double wlpos) {
      if (wl <= 0.0) return 0.0;
      const double p = wlpos / wl;
      return wl * (1.0 - p * p - (1.0 - p) * (1.0 - p));
    };

    bool found = false;
    std::vector<std::size_t> order;
    for (std::size_t f : features) {
      order = rows;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = x_(a, f), vb = x_(b, f);
        return va < vb || (va == vb && a < b);
      });
      double wl = 0.0, wlpos = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const std::size_t i = order[k];
        wl += w_[i];
        wlpos += w_[i] * y_[i];
        const double v = x_(i, f), vnext = x_(order[k + 1], f);
        if (v == vnext) continue;
        const double wr = wsum - wl;
        if (wl < cfg_.min_leaf_weight || wr < cfg_.min_leaf_weight) continue;
        const double impurity = gini(wl, wlpos) + gini(wr, wpos - wlpos);
        const double threshold = v + (vnext - v) / 2.0;
        if (!found || impurity < *best_impurity ||
            (impurity == *best_impurity &&
             (static_cast<int>(f) < *best_feature ||
              (static_cast<int>(f) == *best_feature && threshold < *best_threshold)))) {
          found = true;
          *best_impurity = impurity;
          *best_feature = static_cast<int>(f);
          *best_threshold = threshold;
        }
      }
    }
    if (!found) *best_feature = -1;
  }

  const Matrix& x_;
  std::span<const int> y_;
  std::span<const double> w_;
  const TreeConfig& cfg_;
  Rng* rng_;
};

double tree_score_row(const std::vector<TreeNode>& nodes, const double* row) {
  int id = 0;
  while (nodes[id].feature >= 0)
    id = row[nodes[id].feature] < nodes[id].threshold ? nodes[id].left : nodes[id].right;
  return nodes[id].score;
}

class TreeModel final : public ScoredClassifier {
 public:
  TreeModel(Hyperparams hp) : ScoredClassifier("decision_tree", std::move(hp)) {}

  std::unique_ptr<ScoredClassifier> fresh() const override {
    return std::make_unique<TreeModel>(hp_);
  }

 protected:
  void do_fit(const Matrix& x, std::span<const int> y, std::span<const double> w) override {
    TreeConfig cfg;
    cfg.max_depth = static_cast<std::size_t>(hp_.at("max_depth"));
    double wsum = 0.0;
    for (double wi : w) wsum += wi;
    cfg.min_leaf_weight = hp_.at("min_leaf_frac") * wsum;
    nodes_.clear();
    std::vector<std::size_t> rows(x.rows());
    std::iota(rows.begin(), rows.end(), 0);
    TreeBuilder builder(x, y, w, cfg, nullptr);
    builder.build(rows, 0, nodes_);
  }

  std::vector<double> do_score(const Matrix& x) const override {
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = tree_score_row(nodes_, x.row(i));
    return out;
  }

 private:
  std::vector<TreeNode> nodes_;
};

// ---------------------------------------------------------------------------
// Gaussian naive Bayes with weighted moments.
// ---------------------------------------------------------------------------

class GnbModel final : public ScoredClassifier {
 public:
  GnbModel(Hyperparams hp) : ScoredClassifier("naive_bayes", std::move(hp)) {}

  std::unique_ptr<ScoredClassifier> fresh() const override {
    return std::make_unique<GnbModel>(hp_);
  }

 protected:
  void do_fit(const Matrix& x, std::span<const int> y, std::span<const double> w) override {
    const std::size_t d = x.cols();
    const double var_floor = hp_.at("var_floor");
    for (int c = 0; c < 2; ++c) {
      mean_[c].assign(d, 0.0);
      var_[c].assign(d, 0.0);
    }
    double wtot[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < x.rows(); ++i) {
      wtot[y[i]] += w[i];
      for (std::size_t j = 0; j < d; ++j) mean_[y[i]][j] += w[i] * x(i, j);
    }
    for (int c = 0; c < 2; ++c)
      for (std::size_t j = 0; j < d; ++j) mean_[c][j] /= wtot[c];
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const double dv = x(i, j) - mean_[y[i]][j];
        var_[y[i]][j] += w[i] * dv * dv;
      }
    for (int c = 0; c < 2; ++c)
      for (std::size_t j = 0; j < d; ++j)
        var_[c][j] = std::max(var_[c][j] / wtot[c], var_floor);
    const double w_all = wtot[0] + wtot[1];
    log_prior_[0] = std::log(wtot[0] / w_all);
    log_prior_[1] = std::log(wtot[1] / w_all);
  }

  std::vector<double> do_score(const Matrix& x) const override {
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double lp[2];
      for (int c = 0; c < 2; ++c) {
        double acc = log_prior_[c];
        for (std::size_t j = 0; j < x.cols(); ++j) {
          const double dv = x(i, j) - mean_[c][j];
          acc += -0.5 * (std::log(2.0 * M_PI * var_[c][j]) + dv * dv / var_[c][j]);
        }
        lp[c] = acc;
      }
      // Posterior of class 1 via a stable log-sum-exp.
      const double m = std::max(lp[0], lp[1]);
      const double z0 = std::exp(lp[0] - m), z1 = std::exp(lp[1] - m);
      out[i] = z1 / (z0 + z1);
    }
    return out;
  }

 private:
  std::vector<double> mean_[2], var_[2];
  double log_prior_[2] = {0.0, 0.0};
};

// ---------------------------------------------------------------------------
// Random forest: bagged CART trees on weighted bootstrap resamples.
// ---------------------------------------------------------------------------

class ForestModel final : public ScoredClassifier {
 public:
  ForestModel(Hyperparams hp, std::uint64_t seed)
      : ScoredClassifier("random_forest", std::move(hp)), seed_(seed) {
    if (hp_.at("seed") != 0.0) seed_ = static_cast<std::uint64_t>(hp_.at("seed"));
  }

  std::unique_ptr<ScoredClassifier> fresh() const override {
    auto copy = std::make_unique<ForestModel>(hp_, seed_);
    return copy;
  }

 protected:
  void do_fit(const Matrix& x, std::span<const int> y, std::span<const double> w) override {
    const std::size_t n = x.rows(), d = x.cols();
    const auto tree_count = static_cast<std::size_t>(hp_.at("tree_count"));
    const bool bootstrap = hp_.at("bootstrap") != 0.0;
    if (tree_count < 1) fail(ErrorKind::Config, "random_forest needs tree_count >= 1");

    TreeConfig cfg;
    cfg.max_depth = static_cast<std::size_t>(hp_.at("max_depth"));
    cfg.mtry = bootstrap ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d)))) : 0;

    std::vector<double> cumw(n);
    double wsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      wsum += w[i];
      cumw[i] = wsum;
    }

    trees_.assign(tree_count, {});
    std::vector<std::size_t> rows(n);
    std::vector<int> by(n);
    std::vector<double> bw(n, 1.0);
    for (std::size_t t = 0; t < tree_count; ++t) {
      Rng rng(mix_seed(seed_, t));
      cfg.min_leaf_weight = 0.0;
      if (bootstrap) {
        for (std::size_t i = 0; i < n; ++i) {
          const double u = rng.uniform01() * wsum;
          const std::size_t pick =
              std::lower_bound(cumw.begin(), cumw.end(), u) - cumw.begin();
          rows[i] = std::min(pick, n - 1);
          by[i] = y[rows[i]];
        }
        // Resampled rows carry unit weight; a resample can be single-class,
        // in which case the tree degenerates to one leaf.
        cfg.min_leaf_weight = hp_.at("min_leaf_frac") * static_cast<double>(n);
        BootstrapView view(x, rows);
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        TreeBuilder builder(view.materialized, by, bw, cfg, &rng);
        builder.build(all, 0, trees_[t]);
      } else {
        cfg.min_leaf_weight = hp_.at("min_leaf_frac") * wsum;
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        TreeBuilder builder(x, y, w, cfg, nullptr);
        builder.build(all, 0, trees_[t]);
      }
    }
  }

  std::vector<double> do_score(const Matrix& x) const override {
    std::vector<double> out(x.rows(), 0.0);
    for (const auto& tree : trees_)
      for (std::size_t i = 0; i < x.rows(); ++i) out[i] += tree_score_row(tree, x.row(i));
    const double inv = 1.0 / static_cast<double>(trees_.size());
    for (double& v : out) v *= inv;
    return out;
  }

 private:
  struct BootstrapView {
    Matrix materialized;
    BootstrapView(const Matrix& x, const std::vector<std::size_t>& rows)
        : materialized(rows.size(), x.cols()) {
      for (std::size_t k = 0; k < rows.size(); ++k)
        std::copy_n(x.row(rows[k]), x.cols(), materialized.row(k));
    }
  };

  std::uint64_t seed_;
  std::vector<std::vector<TreeNode>> trees_;
};

}  // namespace

double logistic_loss_grad(const Matrix& x, std::span<const int> y,
                          std::span<const double> w, double l2,
                          std::span<const double> params,
                          std::vector<double>* grad) {
  const std::size_t n = x.rows(), d = x.cols();
  const std::span<const double> coef = params.subspan(0, d);
  const double intercept = params[d];
  if (grad) grad->assign(d + 1, 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = kernels::dot(x.row_span(i), coef) + intercept;
    // w * (softplus(z) - y*z) is the weighted negative log-likelihood.
    loss += w[i] * (softplus(z) - y[i] * z);
    if (grad) {
      const double r = w[i] * (sigmoid(z) - y[i]);
      kernels::axpy(r, x.row_span(i), std::span<double>(grad->data(), d));
      (*grad)[d] += r;
    }
  }
  loss += 0.5 * l2 * kernels::dot(coef, coef);
  if (grad) kernels::axpy(l2, coef, std::span<double>(grad->data(), d));
  return loss;
}

std::vector<std::string> known_model_kinds() {
  return {"logistic_regression", "decision_tree", "naive_bayes", "random_forest"};
}

Hyperparams default_hyperparams(const std::string& kind) {
  if (kind == "logistic_regression")
    return {{"l2_strength", 1.0}, {"max_iters", 1000}, {"tolerance", 1e-6}};
  if (kind == "decision_tree") return {{"max_depth", 5}, {"min_leaf_frac", 0.01}};
  if (kind == "naive_bayes") return {{"var_floor", 1e-9}};
  if (kind == "random_forest")
    return {{"tree_count", 50},
            {"max_depth", 5},
            {"min_leaf_frac", 0.01},
            {"bootstrap", 1},
            {"seed", 0}};
  fail(ErrorKind::Config, "unknown model kind '" + kind + "'");
}

std::unique_ptr<ScoredClassifier> make_model(const std::string& kind,
                                             const Hyperparams& user,
                                             std::uint64_t seed) {
  const Hyperparams hp = merge_hyperparams(kind, default_hyperparams(kind), user);
  if (kind == "logistic_regression") return std::make_unique<LogisticModel>(hp);
  if (kind == "decision_tree") return std::make_unique<TreeModel>(hp);
  if (kind == "naive_bayes") return std::make_unique<GnbModel>(hp);
  return std::make_unique<ForestModel>(hp, seed);
}

const LogisticCoefficients& logistic_coefficients(const ScoredClassifier& model) {
  const auto* lm = dynamic_cast<const LogisticModel*>(&model);
  if (!lm) fail(ErrorKind::Parameter, "model is not a logistic regression");
  return lm->coefficients();
}

}  // namespace faircompose
