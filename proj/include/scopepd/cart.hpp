#pragma once

// Greedy binary tree growing, parameterized by a split criterion. The same
// grower backs weighted-Gini classification trees (CART / random forest)
// and second-order regression trees (gradient boosting).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "scopepd/error.hpp"
#include "scopepd/hyperparams.hpp"
#include "scopepd/matrix.hpp"
#include "scopepd/tree.hpp"

namespace scopepd {

// Weighted Gini impurity. Gain is the decrease of weight-scaled impurity
// w * (1 - p^2 - (1-p)^2); leaf value is the weighted positive fraction.
class GiniCriterion {
 public:
  struct Stats {
    double w = 0.0;
    double w_pos = 0.0;
  };

  GiniCriterion(std::span<const int> y, std::span<const double> weights)
      : y_(y), w_(weights) {}

  void add(Stats& s, std::size_t i) const {
    s.w += w_[i];
    if (y_[i] == 1) s.w_pos += w_[i];
  }
  static Stats minus(const Stats& a, const Stats& b) { return {a.w - b.w, a.w_pos - b.w_pos}; }

  static double weighted_impurity(const Stats& s) {
    if (s.w <= 0) return 0.0;
    const double w_neg = s.w - s.w_pos;
    return 2.0 * s.w_pos * w_neg / s.w;
  }
  static double gain(const Stats& parent, const Stats& left, const Stats& right) {
    return weighted_impurity(parent) - weighted_impurity(left) - weighted_impurity(right);
  }
  static bool accept(double /*gain*/) { return true; }
  static bool is_pure(const Stats& s) { return s.w_pos <= 0.0 || s.w_pos >= s.w; }
  static double leaf_value(const Stats& s) { return s.w > 0 ? s.w_pos / s.w : 0.0; }
  static double cover(const Stats& s) { return s.w; }

 private:
  std::span<const int> y_;
  std::span<const double> w_;
};

// Second-order (Newton) regression criterion on per-sample gradient and
// Hessian; cover tracks the per-sample weights.
class NewtonCriterion {
 public:
  struct Stats {
    double g = 0.0;
    double h = 0.0;
    double w = 0.0;
  };

  NewtonCriterion(std::span<const double> grad, std::span<const double> hess,
                  std::span<const double> weights, double l2_lambda, double learning_rate)
      : g_(grad), h_(hess), w_(weights), lambda_(l2_lambda), eta_(learning_rate) {}

  void add(Stats& s, std::size_t i) const {
    s.g += g_[i];
    s.h += h_[i];
    s.w += w_[i];
  }
  static Stats minus(const Stats& a, const Stats& b) {
    return {a.g - b.g, a.h - b.h, a.w - b.w};
  }

  double score(const Stats& s) const { return s.g * s.g / (s.h + lambda_); }
  double gain(const Stats& parent, const Stats& left, const Stats& right) const {
    return 0.5 * (score(left) + score(right) - score(parent));
  }
  static bool accept(double gain) { return gain > 1e-12; }
  static bool is_pure(const Stats&) { return false; }
  double leaf_value(const Stats& s) const { return -eta_ * s.g / (s.h + lambda_); }
  static double cover(const Stats& s) { return s.w; }

 private:
  std::span<const double> g_, h_, w_;
  double lambda_;
  double eta_;
};

struct GrowOptions {
  int max_depth = 0;  // 0 = unlimited
  int min_samples_leaf = 1;
  std::size_t features_per_split = 0;  // 0 or >= d means every feature
};

namespace detail {

// When every feature is a split candidate, each feature keeps the node's
// sample slots in ascending value order, one contiguous range per node, and
// a split stable-partitions every feature's range so no node re-sorts. With
// feature subsampling only the candidates are sorted, per node.
template <class Criterion>
class TreeGrower {
 public:
  using Stats = typename Criterion::Stats;

  TreeGrower(const Matrix& x, const Criterion& crit, const GrowOptions& opt,
             std::mt19937_64* rng)
      : x_(x), crit_(crit), opt_(opt), rng_(rng) {}

  // `samples` may repeat indices (bootstrap multiplicity). Growing again on
  // the same samples reuses the presorted orders.
  Tree grow(std::vector<std::size_t> samples) {
    if (samples.empty()) throw ValidationError("cannot grow a tree on zero samples");
    const std::size_t m = samples.size(), d = x_.cols();
    const std::size_t k = opt_.features_per_split;
    const bool presort = k == 0 || k >= d || rng_ == nullptr;
    if (presort && presorted_ && samples == samples_ && !initial_order_.empty()) {
      order_ = initial_order_;
    } else {
      samples_ = std::move(samples);
      presorted_ = presort;
      const std::size_t lists = presorted_ ? d : 1;
      values_.resize(d * m);
      order_.resize(lists * m);
      for (std::size_t f = 0; f < d; ++f) {
        double* v = values_.data() + f * m;
        for (std::size_t p = 0; p < m; ++p) v[p] = x_(samples_[p], f);
      }
      for (std::size_t f = 0; f < lists; ++f) {
        std::uint32_t* o = order_.data() + f * m;
        std::iota(o, o + m, 0u);
        if (presorted_) sort_slots(o, o + m, f);
      }
      if (presorted_) initial_order_ = order_;
    }
    goes_left_.assign(m, 0);
    buffer_.resize(m);
    tree_.nodes.clear();
    build(0, m, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  std::vector<std::size_t> candidate_features() {
    const std::size_t d = x_.cols();
    std::vector<std::size_t> f(d);
    std::iota(f.begin(), f.end(), 0);
    const std::size_t k = opt_.features_per_split;
    if (k == 0 || k >= d || rng_ == nullptr) return f;
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, d - 1);
      std::swap(f[i], f[pick(*rng_)]);
    }
    f.resize(k);
    std::sort(f.begin(), f.end());
    return f;
  }

  void sort_slots(std::uint32_t* first, std::uint32_t* last, std::size_t f) const {
    const double* v = values_.data() + f * samples_.size();
    std::sort(first, last, [&](std::uint32_t a, std::uint32_t b) {
      return v[a] < v[b] || (v[a] == v[b] && a < b);
    });
  }

  // Best split over the candidate features; ties within a relative 1e-12
  // keep the earliest (feature, threshold) in ascending order.
  std::optional<Split> best_split(std::size_t begin, std::size_t end, const Stats& parent) {
    std::optional<Split> best;
    const auto msl = static_cast<std::size_t>(opt_.min_samples_leaf);
    const std::size_t n = end - begin, m = samples_.size();
    for (std::size_t f : candidate_features()) {
      const double* v = values_.data() + f * m;
      const std::uint32_t* o;
      if (presorted_) {
        o = order_.data() + f * m + begin;
      } else {
        // Slot order inside an unsorted node range is free, so sort in place.
        std::uint32_t* first = order_.data() + begin;
        std::stable_sort(first, first + n,
                         [&](std::uint32_t a, std::uint32_t b) { return v[a] < v[b]; });
        o = first;
      }
      Stats left{};
      for (std::size_t p = 0; p + 1 < n; ++p) {
        crit_.add(left, samples_[o[p]]);
        const double here = v[o[p]];
        const double next = v[o[p + 1]];
        if (!(here < next)) continue;
        if (p + 1 < msl || n - p - 1 < msl) continue;
        const Stats right = Criterion::minus(parent, left);
        const double g = crit_.gain(parent, left, right);
        if (!best || g > best->gain + 1e-12 * (1.0 + std::abs(best->gain))) {
          best = Split{static_cast<int>(f), 0.5 * (here + next), g};
        }
      }
    }
    return best;
  }

  int build(std::size_t begin, std::size_t end, int depth) {
    const std::size_t m = samples_.size(), n = end - begin;
    Stats s{};
    for (std::size_t p = begin; p < end; ++p) crit_.add(s, samples_[order_[p]]);
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[id].value = crit_.leaf_value(s);
    tree_.nodes[id].cover = Criterion::cover(s);

    const bool depth_ok = opt_.max_depth <= 0 || depth < opt_.max_depth;
    const bool size_ok = n >= 2 * static_cast<std::size_t>(opt_.min_samples_leaf);
    if (!depth_ok || !size_ok || Criterion::is_pure(s)) return id;

    auto split = best_split(begin, end, s);
    if (!split || !Criterion::accept(split->gain)) return id;

    const double* sv = values_.data() + static_cast<std::size_t>(split->feature) * m;
    std::size_t n_left = 0;
    for (std::size_t p = begin; p < end; ++p) {
      const std::uint32_t slot = order_[p];
      goes_left_[slot] = sv[slot] <= split->threshold;
      n_left += goes_left_[slot];
    }
    for (std::size_t f = 0; f < (presorted_ ? x_.cols() : 1); ++f) {
      std::uint32_t* o = order_.data() + f * m;
      std::size_t l = begin, r = 0;
      for (std::size_t p = begin; p < end; ++p) {
        if (goes_left_[o[p]]) {
          o[l++] = o[p];
        } else {
          buffer_[r++] = o[p];
        }
      }
      std::copy(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(r), o + l);
    }
    const int left = build(begin, begin + n_left, depth + 1);
    const int right = build(begin + n_left, end, depth + 1);
    auto& node = tree_.nodes[id];
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.left = left;
    node.right = right;
    node.cover = tree_.nodes[left].cover + tree_.nodes[right].cover;
    return id;
  }

  const Matrix& x_;
  const Criterion& crit_;
  GrowOptions opt_;
  std::mt19937_64* rng_;
  Tree tree_;
  std::vector<std::size_t> samples_;
  std::vector<double> values_;         // [feature][slot]
  std::vector<std::uint32_t> order_;   // [feature][rank within node range], or one slot list
  std::vector<unsigned char> goes_left_;
  std::vector<std::uint32_t> buffer_;
  std::vector<std::uint32_t> initial_order_;
  bool presorted_ = false;
};

}  // namespace detail

template <class Criterion>
Tree grow_tree(const Matrix& x, std::vector<std::size_t> samples, const Criterion& crit,
               const GrowOptions& opt, std::mt19937_64* rng = nullptr) {
  return detail::TreeGrower<Criterion>(x, crit, opt, rng).grow(std::move(samples));
}

inline void check_training_inputs(const Matrix& x, std::span<const int> y) {
  if (x.rows() == 0 || x.cols() == 0) throw ValidationError("training matrix is empty");
  if (y.size() != x.rows()) throw ValidationError("label count differs from row count");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw ValidationError("training matrix has missing or non-finite cells");
  }
  for (int v : y) {
    if (v != 0 && v != 1) throw ValidationError("labels must be 0 or 1");
  }
}

// Weighted-Gini classification tree over all rows, considering every
// feature at every split.
inline Tree fit_cart(const Matrix& x, std::span<const int> y,
                     std::span<const double> sample_weights, const Hyperparams& params) {
  check_training_inputs(x, y);
  if (sample_weights.size() != x.rows()) {
    throw ValidationError("sample weight count differs from row count");
  }
  for (double w : sample_weights) {
    if (!(w > 0)) throw ValidationError("sample weights must be positive");
  }
  std::vector<std::size_t> all(x.rows());
  std::iota(all.begin(), all.end(), 0);
  GiniCriterion crit(y, sample_weights);
  GrowOptions opt{params.max_depth, params.min_samples_leaf, 0};
  return grow_tree(x, std::move(all), crit, opt);
}

}  // namespace scopepd
