#pragma once

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "scopepd/cart.hpp"
#include "scopepd/parallel.hpp"

namespace scopepd {

inline std::size_t default_features_per_split(std::size_t n_features) {
  return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_features))));
}

// Bagged weighted-Gini trees. Tree t draws its bootstrap sample and its
// per-split feature subsets from an RNG seeded by derive_seed(seed, t), so
// the forest is identical for any thread count.
inline TreeEnsemble fit_random_forest(const Matrix& x, std::span<const int> y,
                                      const Hyperparams& params, const ClassWeights& weights,
                                      std::vector<std::string> feature_names = {}) {
  check_training_inputs(x, y);
  if (params.n_trees < 1) throw ConfigError("random forest needs at least one tree");
  std::size_t n_pos = 0;
  for (int v : y) n_pos += v;
  if (n_pos == 0 || n_pos == y.size()) {
    throw ValidationError("random forest training set contains a single class");
  }
  if (!(weights.w_neg > 0 && weights.w_pos > 0)) {
    throw ValidationError("class weights must be positive");
  }
  if (feature_names.empty()) {
    for (std::size_t j = 0; j < x.cols(); ++j) feature_names.push_back("f" + std::to_string(j));
  }
  if (feature_names.size() != x.cols()) {
    throw ValidationError("feature name count differs from column count");
  }

  std::vector<double> sample_w(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) sample_w[i] = y[i] ? weights.w_pos : weights.w_neg;

  const std::size_t d = x.cols();
  std::size_t k = params.features_per_split == 0
                      ? default_features_per_split(d)
                      : static_cast<std::size_t>(params.features_per_split);
  if (k > d) throw ConfigError("features_per_split exceeds the number of features");

  GiniCriterion crit(y, sample_w);
  const GrowOptions opt{params.max_depth, params.min_samples_leaf, k};
  const std::size_t n = x.rows();

  TreeEnsemble forest;
  forest.kind = EnsembleKind::Bagged;
  forest.feature_names = std::move(feature_names);
  forest.trees.resize(static_cast<std::size_t>(params.n_trees));
  parallel_for(forest.trees.size(), params.n_threads, [&](std::size_t t) {
    std::mt19937_64 rng(derive_seed(params.seed, t));
    std::vector<std::size_t> samples(n);
    if (params.bootstrap) {
      std::uniform_int_distribution<std::size_t> draw(0, n - 1);
      for (auto& s : samples) s = draw(rng);
    } else {
      std::iota(samples.begin(), samples.end(), 0);
    }
    forest.trees[t] = grow_tree(x, std::move(samples), crit, opt, &rng);
  });
  return forest;
}

}  // namespace scopepd
