#pragma once

// Reference Shapley values by explicit subset enumeration. Exponential in the
// number of features; used to check treeshap.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scopepd/treeshap.hpp"

namespace scopepd {

inline constexpr std::size_t kMaxOracleFeatures = 15;

// E[f(x) | x_S] for one tree: descend on x for features in S, otherwise
// average both children weighted by cover.
inline double conditional_expectation(const Tree& t, std::span<const double> x,
                                      std::uint32_t subset, int node = 0) {
  const auto& n = t.nodes[node];
  if (n.is_leaf()) return n.value;
  if (subset & (std::uint32_t{1} << n.feature)) {
    return conditional_expectation(t, x, subset, x[n.feature] <= n.threshold ? n.left : n.right);
  }
  const auto& l = t.nodes[n.left];
  const auto& r = t.nodes[n.right];
  return (l.cover * conditional_expectation(t, x, subset, n.left) +
          r.cover * conditional_expectation(t, x, subset, n.right)) /
         n.cover;
}

inline double conditional_expectation(const TreeEnsemble& e, std::span<const double> x,
                                      std::uint32_t subset) {
  double s = 0;
  for (const auto& t : e.trees) s += conditional_expectation(t, x, subset);
  if (e.kind == EnsembleKind::Bagged) return s / static_cast<double>(e.trees.size());
  return e.base_score + s;
}

inline std::vector<double> brute_force_shapley(const TreeEnsemble& e, std::span<const double> x) {
  const std::size_t m = x.size();
  if (m > kMaxOracleFeatures) {
    const double evals = std::ldexp(1.0, static_cast<int>(m));
    throw ValidationError("subset enumeration over " + std::to_string(m) + " features needs " +
                          std::to_string(static_cast<long long>(evals)) +
                          " coalition evaluations per tree; limit is " +
                          std::to_string(kMaxOracleFeatures) + " features");
  }
  detail::check_row(e, x);
  for (const auto& t : e.trees) expected_value(t);

  const std::uint32_t n_subsets = std::uint32_t{1} << m;
  std::vector<double> v(n_subsets);
  for (std::uint32_t s = 0; s < n_subsets; ++s) v[s] = conditional_expectation(e, x, s);

  // weight[k] = k! (m - k - 1)! / m!
  std::vector<double> weight(m);
  for (std::size_t k = 0; k < m; ++k) {
    weight[k] = std::exp(std::lgamma(k + 1.0) + std::lgamma(static_cast<double>(m - k)) -
                         std::lgamma(m + 1.0));
  }
  std::vector<double> phi(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint32_t bit = std::uint32_t{1} << i;
    for (std::uint32_t s = 0; s < n_subsets; ++s) {
      if (s & bit) continue;
      phi[i] += weight[static_cast<std::size_t>(std::popcount(s))] * (v[s | bit] - v[s]);
    }
  }
  return phi;
}

}  // namespace scopepd
