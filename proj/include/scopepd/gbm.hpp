#pragma once

// Stagewise logistic-loss boosting with second-order trees. Positive-class
// gradients and Hessians are multiplied by scale_pos_weight (spw), which is
// the same as training on a logistic loss where every positive sample has
// weight spw.

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "scopepd/cart.hpp"

namespace scopepd {

// Weighted logistic loss sum_i w_i * log(1 + exp(-s_i * m_i)) with
// w_i = spw for positives and 1 for negatives.
inline double weighted_logistic_loss(std::span<const double> margins, std::span<const int> y,
                                     double spw) {
  double loss = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double m = y[i] ? -margins[i] : margins[i];
    const double softplus = m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
    loss += (y[i] ? spw : 1.0) * softplus;
  }
  return loss;
}

// `loss_trace`, when given, receives the training loss before the first
// round and after every round.
inline TreeEnsemble fit_gbm(const Matrix& x, std::span<const int> y, const Hyperparams& params,
                            double spw, std::vector<std::string> feature_names = {},
                            std::vector<double>* loss_trace = nullptr) {
  check_training_inputs(x, y);
  if (!(spw > 0) || !std::isfinite(spw)) throw ValidationError("scale_pos_weight must be positive");
  if (params.n_trees < 0) throw ConfigError("boosting rounds must be non-negative");
  if (feature_names.empty()) {
    for (std::size_t j = 0; j < x.cols(); ++j) feature_names.push_back("f" + std::to_string(j));
  }
  if (feature_names.size() != x.cols()) {
    throw ValidationError("feature name count differs from column count");
  }
  const std::size_t n = x.rows();
  std::vector<double> w(n);
  double w_pos = 0, w_all = 0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = y[i] ? spw : 1.0;
    w_all += w[i];
    if (y[i]) w_pos += w[i];
  }
  if (w_pos == 0 || w_pos == w_all) {
    throw ValidationError("boosting training set contains a single class");
  }
  const double p0 = w_pos / w_all;

  TreeEnsemble model;
  model.kind = EnsembleKind::Boosted;
  model.base_score = std::log(p0 / (1.0 - p0));
  model.feature_names = std::move(feature_names);

  std::vector<double> margin(n, model.base_score), grad(n), hess(n);
  if (loss_trace) loss_trace->push_back(weighted_logistic_loss(margin, y, spw));

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  const GrowOptions opt{params.max_depth, params.min_samples_leaf,
                        static_cast<std::size_t>(params.features_per_split)};
  std::mt19937_64 rng(derive_seed(params.seed, 0xB0057));
  // The criterion views grad/hess, which are refreshed in place each round.
  const NewtonCriterion crit(grad, hess, w, params.l2_lambda, params.learning_rate);
  detail::TreeGrower<NewtonCriterion> grower(x, crit, opt, &rng);

  for (int round = 0; round < params.n_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      grad[i] = p - y[i];
      hess[i] = p * (1.0 - p);
      if (y[i]) {
        grad[i] *= spw;
        hess[i] *= spw;
      }
    }
    Tree tree = grower.grow(all);
    for (std::size_t i = 0; i < n; ++i) {
      margin[i] += tree.predict(x.row(i));
      if (!std::isfinite(margin[i])) {
        throw NumericError("non-finite margin at boosting stage " + std::to_string(round));
      }
    }
    model.trees.push_back(std::move(tree));
    if (loss_trace) loss_trace->push_back(weighted_logistic_loss(margin, y, spw));
  }
  return model;
}

}  // namespace scopepd
