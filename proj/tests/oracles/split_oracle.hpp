#pragma once

// Exhaustive split search: every (feature, midpoint) pair is evaluated by
// recounting both children from scratch.

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <vector>

#include "scopepd/matrix.hpp"

namespace oracle {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

inline double gini_mass(double w, double w_pos) {
  if (w <= 0) return 0.0;
  const double p = w_pos / w;
  return w * (1.0 - p * p - (1.0 - p) * (1.0 - p));
}

// Candidate splits respect an unweighted minimum leaf size. The winner is
// the first (feature, threshold) in ascending order whose gain is within a
// relative 1e-9 of the maximum.
inline std::optional<SplitChoice> best_gini_split(const scopepd::Matrix& x,
                                                  const std::vector<int>& y,
                                                  const std::vector<double>& w,
                                                  std::size_t min_leaf = 1) {
  std::vector<SplitChoice> all;
  double tw = 0, tp = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    tw += w[i];
    tp += y[i] ? w[i] : 0.0;
  }
  const double parent = gini_mass(tw, tp);
  for (std::size_t f = 0; f < x.cols(); ++f) {
    std::set<double> distinct;
    for (std::size_t i = 0; i < x.rows(); ++i) distinct.insert(x(i, f));
    std::vector<double> v(distinct.begin(), distinct.end());
    for (std::size_t k = 0; k + 1 < v.size(); ++k) {
      const double t = 0.5 * (v[k] + v[k + 1]);
      double lw = 0, lp = 0, rw = 0, rp = 0;
      std::size_t nl = 0, nr = 0;
      for (std::size_t i = 0; i < x.rows(); ++i) {
        if (x(i, f) <= t) {
          lw += w[i];
          lp += y[i] ? w[i] : 0.0;
          ++nl;
        } else {
          rw += w[i];
          rp += y[i] ? w[i] : 0.0;
          ++nr;
        }
      }
      if (nl < min_leaf || nr < min_leaf) continue;
      all.push_back({static_cast<int>(f), t, parent - gini_mass(lw, lp) - gini_mass(rw, rp)});
    }
  }
  if (all.empty()) return std::nullopt;
  double best = -1e300;
  for (const auto& s : all) best = std::max(best, s.gain);
  for (const auto& s : all) {
    if (s.gain >= best - 1e-9 * (1.0 + std::abs(best))) return s;
  }
  return std::nullopt;
}

}  // namespace oracle
