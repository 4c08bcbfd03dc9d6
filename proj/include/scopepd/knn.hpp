#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "scopepd/error.hpp"
#include "scopepd/matrix.hpp"

namespace scopepd {

struct KnnModel {
  Matrix x;
  std::vector<int> y;
  int k = 5;
};

// Fraction of positives among the k nearest training rows (Euclidean);
// equal distances are resolved by the lower training index.
inline double knn_predict_proba(const Matrix& train_x, std::span<const int> train_y,
                                std::span<const double> query, int k) {
  const std::size_t n = train_x.rows();
  if (n == 0) throw ValidationError("KNN training set is empty");
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw ValidationError("k = " + std::to_string(k) + " must lie in [1, n_train = " +
                          std::to_string(n) + "]");
  }
  if (query.size() != train_x.cols()) throw ValidationError("query width differs from training data");
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    auto row = train_x.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double d = row[j] - query[j];
      s += d * d;
    }
    dist[i] = {s, i};
  }
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  int pos = 0;
  for (int i = 0; i < k; ++i) pos += train_y[dist[i].second];
  return static_cast<double>(pos) / k;
}

inline double knn_predict_proba(const KnnModel& m, std::span<const double> query) {
  return knn_predict_proba(m.x, m.y, query, m.k);
}

}  // namespace scopepd
