#pragma once

// Uniform fit / predict entry point over the four model families. Class
// weights are derived from the training labels passed in, so callers that
// fit inside a CV fold automatically get fold-local weights.

#include <span>
#include <variant>
#include <vector>

#include "scopepd/forest.hpp"
#include "scopepd/gbm.hpp"
#include "scopepd/knn.hpp"
#include "scopepd/logreg.hpp"

namespace scopepd {

using FittedModel = std::variant<LogRegModel, KnnModel, TreeEnsemble>;

inline std::pair<std::size_t, std::size_t> class_counts(std::span<const int> y) {
  std::size_t pos = 0;
  for (int v : y) pos += v == 1;
  return {y.size() - pos, pos};
}

inline FittedModel fit_model(ModelFamily family, const Hyperparams& params, const Matrix& x,
                             std::span<const int> y,
                             const std::vector<std::string>& feature_names = {}) {
  validate(params);
  const auto [n_neg, n_pos] = class_counts(y);
  switch (family) {
    case ModelFamily::LR:
      return fit_logreg(x, y, balanced_weights(n_neg, n_pos), params);
    case ModelFamily::KNN: {
      check_training_inputs(x, y);
      return KnnModel{x, std::vector<int>(y.begin(), y.end()), params.k_neighbors};
    }
    case ModelFamily::RF:
      return fit_random_forest(x, y, params, balanced_weights(n_neg, n_pos), feature_names);
    case ModelFamily::GBM:
      return fit_gbm(x, y, params, scale_pos_weight(n_neg, n_pos), feature_names);
  }
  throw ConfigError("unknown model family");
}

inline double predict_proba(const FittedModel& model, std::span<const double> x) {
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, KnnModel>) {
          return knn_predict_proba(m, x);
        } else {
          return m.predict_proba(x);
        }
      },
      model);
}

inline std::vector<double> predict_proba(const FittedModel& model, const Matrix& x) {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_proba(model, x.row(i));
  return out;
}

}  // namespace scopepd
