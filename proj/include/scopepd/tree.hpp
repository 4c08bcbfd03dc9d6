#pragma once

// Decision-tree and tree-ensemble representation shared by the random
// forest, the boosted learner and the attribution code.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "scopepd/error.hpp"

namespace scopepd {

// Flat node record. Internal nodes send x[feature] <= threshold to `left`.
// `cover` is the weighted number of training samples reaching the node;
// internal nodes store the sum of their children's covers. `value` is the
// prediction at a leaf (internal nodes keep the node-level estimate, which
// is informational only).
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  double cover = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  int leaf_index(std::span<const double> x) const {
    int n = 0;
    while (!nodes[n].is_leaf()) {
      const auto& node = nodes[n];
      n = x[node.feature] <= node.threshold ? node.left : node.right;
    }
    return n;
  }

  double predict(std::span<const double> x) const { return nodes[leaf_index(x)].value; }

  int depth(int n = 0) const {
    if (nodes[n].is_leaf()) return 0;
    return 1 + std::max(depth(nodes[n].left), depth(nodes[n].right));
  }

  std::size_t leaf_count() const {
    std::size_t c = 0;
    for (const auto& n : nodes) c += n.is_leaf();
    return c;
  }
};

enum class EnsembleKind { Bagged, Boosted };

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Bagged: probability = mean of leaf values (each a positive-class
// proportion). Boosted: probability = sigmoid(base_score + sum of leaves).
struct TreeEnsemble {
  std::vector<Tree> trees;
  EnsembleKind kind = EnsembleKind::Bagged;
  double base_score = 0.0;
  std::vector<std::string> feature_names;

  // Model output in the space attributions are expressed in: probability
  // for bagged ensembles, log-odds margin for boosted ones.
  double raw_output(std::span<const double> x) const {
    if (kind == EnsembleKind::Bagged) {
      if (trees.empty()) throw ModelIntegrityError("bagged ensemble has no trees");
      double s = 0;
      for (const auto& t : trees) s += t.predict(x);
      return s / static_cast<double>(trees.size());
    }
    double m = base_score;
    for (const auto& t : trees) m += t.predict(x);
    return m;
  }

  double predict_proba(std::span<const double> x) const {
    const double r = raw_output(x);
    return kind == EnsembleKind::Bagged ? r : sigmoid(r);
  }

  const char* output_space() const {
    return kind == EnsembleKind::Bagged ? "probability" : "log_odds";
  }
};

// Throws ModelIntegrityError when child links, covers or leaf values are
// inconsistent.
inline void check_integrity(const Tree& t, std::size_t n_features) {
  if (t.nodes.empty()) throw ModelIntegrityError("tree has no nodes");
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    const auto& n = t.nodes[i];
    if (!(n.cover > 0.0)) {
      throw ModelIntegrityError("node " + std::to_string(i) + " has non-positive cover");
    }
    if (n.is_leaf()) {
      if (!std::isfinite(n.value)) {
        throw ModelIntegrityError("leaf " + std::to_string(i) + " has a non-finite value");
      }
      continue;
    }
    const auto size = static_cast<int>(t.nodes.size());
    if (n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) || n.left >= size ||
        n.right >= size) {
      throw ModelIntegrityError("node " + std::to_string(i) + " has invalid children");
    }
    if (static_cast<std::size_t>(n.feature) >= n_features) {
      throw ModelIntegrityError("node " + std::to_string(i) + " splits on unknown feature");
    }
  }
}

inline void check_integrity(const TreeEnsemble& e) {
  for (const auto& t : e.trees) check_integrity(t, e.feature_names.size());
}

// ---------------------------------------------------------------------------
// Serialization. One JSON document; each node is a flat record so external
// tools can rebuild the tree without knowing this library.

inline nlohmann::json to_json(const TreeEnsemble& e) {
  nlohmann::json j;
  j["format"] = "scopepd-tree-ensemble";
  j["version"] = 1;
  j["kind"] = e.kind == EnsembleKind::Bagged ? "bagged" : "boosted";
  j["output_space"] = e.output_space();
  j["base_score"] = e.base_score;
  j["feature_names"] = e.feature_names;
  j["trees"] = nlohmann::json::array();
  for (const auto& t : e.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      const auto& n = t.nodes[i];
      nlohmann::json r{{"id", i}, {"cover", n.cover}, {"value", n.value}};
      if (n.is_leaf()) {
        r["leaf"] = true;
      } else {
        r["leaf"] = false;
        r["feature"] = n.feature;
        r["threshold"] = n.threshold;
        r["left"] = n.left;
        r["right"] = n.right;
      }
      nodes.push_back(std::move(r));
    }
    j["trees"].push_back({{"nodes", std::move(nodes)}});
  }
  return j;
}

inline TreeEnsemble ensemble_from_json(const nlohmann::json& j) {
  TreeEnsemble e;
  try {
    const std::string kind = j.at("kind");
    if (kind == "bagged") {
      e.kind = EnsembleKind::Bagged;
    } else if (kind == "boosted") {
      e.kind = EnsembleKind::Boosted;
    } else {
      throw ModelIntegrityError("unknown ensemble kind '" + kind + "'");
    }
    e.base_score = j.at("base_score").get<double>();
    e.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    for (const auto& jt : j.at("trees")) {
      Tree t;
      for (const auto& r : jt.at("nodes")) {
        if (r.at("id").get<std::size_t>() != t.nodes.size()) {
          throw ModelIntegrityError("tree node ids must be dense and ordered");
        }
        TreeNode n;
        n.cover = r.at("cover").get<double>();
        n.value = r.at("value").get<double>();
        if (!r.at("leaf").get<bool>()) {
          n.feature = r.at("feature").get<int>();
          n.threshold = r.at("threshold").get<double>();
          n.left = r.at("left").get<int>();
          n.right = r.at("right").get<int>();
        }
        t.nodes.push_back(n);
      }
      e.trees.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ModelIntegrityError(std::string("malformed ensemble document: ") + ex.what());
  }
  check_integrity(e);
  return e;
}

inline void save_ensemble(const std::string& path, const TreeEnsemble& e) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << to_json(e).dump(1) << '\n';
}

inline TreeEnsemble load_ensemble(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("model artifact missing: '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw ModelIntegrityError("cannot parse model '" + path + "': " + ex.what());
  }
  return ensemble_from_json(j);
}

}  // namespace scopepd
