#pragma once

// Exact path-dependent Shapley values for tree ensembles. Off-path
// expectations descend both children in proportion to node cover.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "scopepd/matrix.hpp"
#include "scopepd/tree.hpp"

namespace scopepd {

struct Attribution {
  std::string participant_id;
  double base_value = 0.0;
  std::vector<double> phi;  // aligned with the ensemble's feature order
  double prediction = 0.0;  // in output_space
  std::string output_space;
};

// Cover-weighted mean of leaf values for one tree.
inline double expected_value(const Tree& t) {
  if (t.nodes.empty()) throw ModelIntegrityError("tree has no nodes");
  const double root = t.nodes[0].cover;
  if (!(root > 0.0)) throw ModelIntegrityError("root node has zero cover");
  double s = 0;
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    const auto& n = t.nodes[i];
    if (!(n.cover > 0.0)) {
      throw ModelIntegrityError("node " + std::to_string(i) + " has zero cover");
    }
    if (n.is_leaf()) s += n.cover * n.value;
  }
  return s / root;
}

inline double expected_value(const TreeEnsemble& e) {
  if (e.kind == EnsembleKind::Bagged) {
    if (e.trees.empty()) throw ModelIntegrityError("bagged ensemble has no trees");
    double s = 0;
    for (const auto& t : e.trees) s += expected_value(t);
    return s / static_cast<double>(e.trees.size());
  }
  double s = e.base_score;
  for (const auto& t : e.trees) s += expected_value(t);
  return s;
}

namespace detail {

struct PathElement {
  int feature;
  double zero_fraction;
  double one_fraction;
  double weight;
};

class TreeShapRecursion {
 public:
  TreeShapRecursion(const Tree& t, std::span<const double> x, std::span<double> phi, double scale)
      : t_(t), x_(x), phi_(phi), scale_(scale) {
    const int d = t.depth() + 2;
    pool_.resize(static_cast<std::size_t>(d) * (d + 1) / 2 + d);
  }

  void run() { recurse(0, 0, 0, 1.0, 1.0, -1); }

 private:
  static void extend(PathElement* path, int depth, double zero, double one, int feature) {
    path[depth] = {feature, zero, one, depth == 0 ? 1.0 : 0.0};
    for (int i = depth - 1; i >= 0; --i) {
      path[i + 1].weight += one * path[i].weight * (i + 1) / static_cast<double>(depth + 1);
      path[i].weight = zero * path[i].weight * (depth - i) / static_cast<double>(depth + 1);
    }
  }

  static void unwind(PathElement* path, int depth, int index) {
    const double one = path[index].one_fraction;
    const double zero = path[index].zero_fraction;
    double next = path[depth].weight;
    for (int i = depth - 1; i >= 0; --i) {
      if (one != 0) {
        const double tmp = path[i].weight;
        path[i].weight = next * (depth + 1) / ((i + 1) * one);
        next = tmp - path[i].weight * zero * (depth - i) / static_cast<double>(depth + 1);
      } else {
        path[i].weight = path[i].weight * (depth + 1) / (zero * (depth - i));
      }
    }
    for (int i = index; i < depth; ++i) {
      path[i].feature = path[i + 1].feature;
      path[i].zero_fraction = path[i + 1].zero_fraction;
      path[i].one_fraction = path[i + 1].one_fraction;
    }
  }

  static double unwound_sum(const PathElement* path, int depth, int index) {
    const double one = path[index].one_fraction;
    const double zero = path[index].zero_fraction;
    double next = path[depth].weight;
    double total = 0;
    for (int i = depth - 1; i >= 0; --i) {
      if (one != 0) {
        const double tmp = next * (depth + 1) / ((i + 1) * one);
        total += tmp;
        next = path[i].weight - tmp * zero * ((depth - i) / static_cast<double>(depth + 1));
      } else {
        total += (path[i].weight / zero) / ((depth - i) / static_cast<double>(depth + 1));
      }
    }
    return total;
  }

  // `offset` locates this level's path copy in the pool; each level copies
  // the parent path so sibling recursions see an unmodified prefix.
  void recurse(int node, std::size_t offset, int depth, double zero, double one, int feature,
               const PathElement* parent = nullptr) {
    PathElement* path = pool_.data() + offset;
    if (parent) std::copy(parent, parent + depth, path);
    extend(path, depth, zero, one, feature);
    const auto& n = t_.nodes[node];

    if (n.is_leaf()) {
      for (int i = 1; i <= depth; ++i) {
        const double w = unwound_sum(path, depth, i);
        const auto& el = path[i];
        phi_[el.feature] += scale_ * w * (el.one_fraction - el.zero_fraction) * n.value;
      }
      return;
    }

    const int split = n.feature;
    const bool go_left = x_[split] <= n.threshold;
    const int hot = go_left ? n.left : n.right;
    const int cold = go_left ? n.right : n.left;
    const double hot_zero = t_.nodes[hot].cover / n.cover;
    const double cold_zero = t_.nodes[cold].cover / n.cover;
    double incoming_zero = 1.0, incoming_one = 1.0;

    // A feature already on the path is removed and its fractions folded in.
    int path_index = 0;
    for (; path_index <= depth; ++path_index) {
      if (path[path_index].feature == split) break;
    }
    int child_depth = depth + 1;
    if (path_index != depth + 1) {
      incoming_zero = path[path_index].zero_fraction;
      incoming_one = path[path_index].one_fraction;
      unwind(path, depth, path_index);
      child_depth = depth;
    }
    const std::size_t child_offset = offset + static_cast<std::size_t>(depth) + 1;
    recurse(hot, child_offset, child_depth, hot_zero * incoming_zero, incoming_one, split, path);
    recurse(cold, child_offset, child_depth, cold_zero * incoming_zero, 0.0, split, path);
  }

  const Tree& t_;
  std::span<const double> x_;
  std::span<double> phi_;
  double scale_;
  std::vector<PathElement> pool_;
};

inline void check_row(const TreeEnsemble& e, std::span<const double> x) {
  if (!e.feature_names.empty() && x.size() != e.feature_names.size()) {
    throw ValidationError("row has " + std::to_string(x.size()) + " values but the model expects " +
                          std::to_string(e.feature_names.size()));
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (is_missing(x[j])) {
      const std::string name =
          j < e.feature_names.size() ? e.feature_names[j] : "#" + std::to_string(j);
      throw ValidationError("feature '" + name + "' is missing from the row");
    }
  }
}

}  // namespace detail

// Adds scale * phi(tree, x) into `phi`.
inline void treeshap_accumulate(const Tree& t, std::span<const double> x, std::span<double> phi,
                                double scale = 1.0) {
  detail::TreeShapRecursion(t, x, phi, scale).run();
}

inline Attribution treeshap(const TreeEnsemble& e, std::span<const double> x,
                            std::string participant_id = {}) {
  detail::check_row(e, x);
  Attribution a;
  a.participant_id = std::move(participant_id);
  a.phi.assign(x.size(), 0.0);
  const double scale =
      e.kind == EnsembleKind::Bagged ? 1.0 / static_cast<double>(e.trees.size()) : 1.0;
  for (const auto& t : e.trees) {
    expected_value(t);  // cover check
    treeshap_accumulate(t, x, a.phi, scale);
  }
  a.base_value = expected_value(e);
  a.prediction = e.raw_output(x);
  a.output_space = e.output_space();
  return a;
}

}  // namespace scopepd
