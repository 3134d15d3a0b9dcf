#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "faircompose/core.hpp"
#include "faircompose/dataset.hpp"

namespace faircompose {

using Hyperparams = std::map<std::string, double>;

/// Contract shared by base models and mitigated meta-models: fit on weighted
/// data, emit scores in [0,1]. Fitted models are immutable and scoring is
/// reentrant.
class ScoredClassifier {
 public:
  virtual ~ScoredClassifier() = default;

  void fit(const Matrix& x, std::span<const int> y, std::span<const double> w);
  void fit(const TabularDataset& ds) { fit(ds.features, ds.labels, ds.weights); }

  std::vector<double> score(const Matrix& x) const;
  std::vector<double> score(const TabularDataset& ds) const { return score(ds.features); }

  bool fitted() const { return fitted_; }
  const std::string& kind() const { return kind_; }
  const Hyperparams& hyperparams() const { return hp_; }

  /// Unfitted copy with the same hyperparameters (for reduction rounds).
  virtual std::unique_ptr<ScoredClassifier> fresh() const = 0;

 protected:
  ScoredClassifier(std::string kind, Hyperparams hp)
      : kind_(std::move(kind)), hp_(std::move(hp)) {}
  virtual void do_fit(const Matrix& x, std::span<const int> y,
                      std::span<const double> w) = 0;
  virtual std::vector<double> do_score(const Matrix& x) const = 0;

  std::string kind_;
  Hyperparams hp_;
  bool fitted_ = false;
};

/// Known kinds: logistic_regression, decision_tree, naive_bayes,
/// random_forest. Unknown kinds or hyperparameter keys raise Config errors.
std::vector<std::string> known_model_kinds();
Hyperparams default_hyperparams(const std::string& kind);
std::unique_ptr<ScoredClassifier> make_model(const std::string& kind,
                                             const Hyperparams& hp,
                                             std::uint64_t seed);

/// Recipe for producing fresh base learners inside reductions.
struct ModelFactory {
  std::string kind;
  Hyperparams hp;
  std::uint64_t seed = 0;
  std::unique_ptr<ScoredClassifier> make() const { return make_model(kind, hp, seed); }
};

/// Fitted logistic coefficients, exposed for tests and explanations.
struct LogisticCoefficients {
  std::vector<double> coef;
  double intercept = 0.0;
  double grad_max_norm = 0.0;
  std::size_t iterations = 0;
};
const LogisticCoefficients& logistic_coefficients(const ScoredClassifier& model);

/// Weighted L2-regularized logistic loss and gradient at the given
/// parameters (coef then intercept); used by the finite-difference tests.
double logistic_loss_grad(const Matrix& x, std::span<const int> y,
                          std::span<const double> w, double l2,
                          std::span<const double> params,
                          std::vector<double>* grad);

}  // namespace faircompose
