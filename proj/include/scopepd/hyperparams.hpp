#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"
#include "scopepd/error.hpp"

namespace scopepd {

enum class ModelFamily { LR, KNN, RF, GBM };

inline std::string_view to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::LR: return "lr";
    case ModelFamily::KNN: return "knn";
    case ModelFamily::RF: return "rf";
    case ModelFamily::GBM: return "gbm";
  }
  return "?";
}

inline std::string_view display_name(ModelFamily f) {
  switch (f) {
    case ModelFamily::LR: return "Logistic Regression";
    case ModelFamily::KNN: return "KNN";
    case ModelFamily::RF: return "Random Forest";
    case ModelFamily::GBM: return "Gradient Boosting";
  }
  return "?";
}

inline ModelFamily parse_family(std::string_view s) {
  if (s == "lr") return ModelFamily::LR;
  if (s == "knn") return ModelFamily::KNN;
  if (s == "rf") return ModelFamily::RF;
  if (s == "gbm") return ModelFamily::GBM;
  throw ConfigError("unknown model family '" + std::string(s) + "'");
}

// Union of the knobs used by every family; each learner reads only its own.
// Zero is a sentinel where noted.
struct Hyperparams {
  int n_trees = 100;
  int max_depth = 0;           // 0 = unlimited
  int min_samples_leaf = 1;
  int features_per_split = 0;  // 0 = ceil(sqrt(d)) for forests, d for boosting
  bool bootstrap = true;
  double learning_rate = 0.1;
  double l2_lambda = 1.0;
  int k_neighbors = 5;
  double lr_l2 = 0.1;
  int lr_max_iter = 2000;
  double lr_step = 0.0;  // 0 = 1 / (Lipschitz bound of the gradient)
  std::uint64_t seed = 42;
  unsigned n_threads = 1;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

struct ClassWeights {
  double w_neg = 1.0;
  double w_pos = 1.0;
};

// w_c = n / (2 n_c)
inline ClassWeights balanced_weights(std::size_t n_neg, std::size_t n_pos) {
  if (n_neg == 0 || n_pos == 0) {
    throw ValidationError("balanced class weights need both classes present");
  }
  const double n = static_cast<double>(n_neg + n_pos);
  return {n / (2.0 * static_cast<double>(n_neg)), n / (2.0 * static_cast<double>(n_pos))};
}

inline double scale_pos_weight(std::size_t n_neg, std::size_t n_pos) {
  if (n_pos == 0) throw ValidationError("scale_pos_weight needs at least one positive sample");
  return static_cast<double>(n_neg) / static_cast<double>(n_pos);
}

// JSON keys mirror the field names. Unknown keys are rejected so typos in a
// grid file do not silently fall back to defaults.
inline void apply_json(Hyperparams& p, const std::string& key, const nlohmann::json& v) {
  try {
    if (key == "n_trees") p.n_trees = v.get<int>();
    else if (key == "max_depth") p.max_depth = v.is_null() ? 0 : v.get<int>();
    else if (key == "min_samples_leaf") p.min_samples_leaf = v.get<int>();
    else if (key == "features_per_split") p.features_per_split = v.get<int>();
    else if (key == "bootstrap") p.bootstrap = v.get<bool>();
    else if (key == "learning_rate") p.learning_rate = v.get<double>();
    else if (key == "l2_lambda") p.l2_lambda = v.get<double>();
    else if (key == "k_neighbors" || key == "k") p.k_neighbors = v.get<int>();
    else if (key == "lr_l2" || key == "l2") p.lr_l2 = v.get<double>();
    else if (key == "lr_max_iter") p.lr_max_iter = v.get<int>();
    else if (key == "lr_step") p.lr_step = v.get<double>();
    else if (key == "seed") p.seed = v.get<std::uint64_t>();
    else throw ConfigError("unknown hyperparameter '" + key + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("hyperparameter '" + key + "': " + e.what());
  }
}

inline void validate(const Hyperparams& p) {
  if (p.n_trees < 0 || p.max_depth < 0 || p.min_samples_leaf < 1 ||
      p.features_per_split < 0 || !(p.learning_rate > 0) || p.l2_lambda < 0 ||
      p.k_neighbors < 1 || p.lr_l2 < 0 || p.lr_max_iter < 1 || p.lr_step < 0) {
    throw ConfigError("hyperparameters out of range");
  }
}

inline nlohmann::json to_json(const Hyperparams& p, ModelFamily f) {
  switch (f) {
    case ModelFamily::RF:
      return {{"n_trees", p.n_trees},
              {"max_depth", p.max_depth == 0 ? nlohmann::json() : nlohmann::json(p.max_depth)},
              {"min_samples_leaf", p.min_samples_leaf},
              {"features_per_split", p.features_per_split},
              {"bootstrap", p.bootstrap}};
    case ModelFamily::GBM:
      return {{"n_trees", p.n_trees},
              {"max_depth", p.max_depth == 0 ? nlohmann::json() : nlohmann::json(p.max_depth)},
              {"learning_rate", p.learning_rate},
              {"l2_lambda", p.l2_lambda},
              {"min_samples_leaf", p.min_samples_leaf}};
    case ModelFamily::LR:
      return {{"lr_l2", p.lr_l2}, {"lr_max_iter", p.lr_max_iter}, {"lr_step", p.lr_step}};
    case ModelFamily::KNN:
      return {{"k_neighbors", p.k_neighbors}};
  }
  return {};
}

}  // namespace scopepd
