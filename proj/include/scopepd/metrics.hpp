#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "scopepd/error.hpp"

namespace scopepd {

struct MetricSet {
  double accuracy = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double roc_auc = 0;  // NaN when only one class is present
  double pr_auc = 0;   // average precision; NaN without positives
};

// Counts indexed [true class][predicted class], class 0 = HC, 1 = PD.
struct ConfusionCounts {
  std::array<std::array<std::size_t, 2>, 2> n{};

  std::size_t tn() const { return n[0][0]; }
  std::size_t fp() const { return n[0][1]; }
  std::size_t fn() const { return n[1][0]; }
  std::size_t tp() const { return n[1][1]; }
  std::size_t total() const { return tn() + fp() + fn() + tp(); }
};

using NormalizedConfusion = std::array<std::array<double, 2>, 2>;

namespace detail {

inline void check_scores(std::span<const int> y, std::span<const double> score) {
  if (y.size() != score.size()) throw ValidationError("label and score lengths differ");
  for (int v : y) {
    if (v != 0 && v != 1) throw ValidationError("labels must be 0 or 1");
  }
}

}  // namespace detail

// Hard prediction: positive iff score > threshold, so an exact 0.5 from a
// tied forest vote is predicted negative.
inline int hard_label(double score, double threshold = 0.5) { return score > threshold ? 1 : 0; }

inline ConfusionCounts confusion_counts(std::span<const int> y, std::span<const double> score,
                                        double threshold = 0.5) {
  detail::check_scores(y, score);
  ConfusionCounts c;
  for (std::size_t i = 0; i < y.size(); ++i) ++c.n[y[i]][hard_label(score[i], threshold)];
  return c;
}

inline NormalizedConfusion normalize_rows(const ConfusionCounts& c) {
  NormalizedConfusion out{};
  for (int r = 0; r < 2; ++r) {
    const double total = static_cast<double>(c.n[r][0] + c.n[r][1]);
    if (total == 0) continue;
    for (int p = 0; p < 2; ++p) out[r][p] = static_cast<double>(c.n[r][p]) / total;
  }
  return out;
}

// Mann-Whitney U statistic with mid-ranks for ties, divided by n_pos*n_neg.
inline double roc_auc(std::span<const int> y, std::span<const double> score) {
  detail::check_scores(y, score);
  const std::size_t n = y.size();
  std::size_t n_pos = 0;
  for (int v : y) n_pos += v;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw UndefinedMetricError("ROC-AUC is undefined when only one class is present");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
  double rank_sum_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && score[order[j]] == score[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // average of i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (y[order[k]]) rank_sum_pos += mid_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double u = rank_sum_pos - np * (np + 1) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

// Average precision: sum over descending distinct score thresholds of
// precision(t) * (recall(t) - recall(previous t)). No interpolation.
inline double average_precision(std::span<const int> y, std::span<const double> score) {
  detail::check_scores(y, score);
  const std::size_t n = y.size();
  std::size_t n_pos = 0;
  for (int v : y) n_pos += v;
  if (n_pos == 0) throw UndefinedMetricError("average precision is undefined without positives");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  double ap = 0, prev_recall = 0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && score[order[j]] == score[order[i]]) {
      tp += y[order[j]];
      ++j;
    }
    seen = j;
    const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

inline MetricSet metrics_from_confusion(const ConfusionCounts& c) {
  MetricSet m;
  const double tp = static_cast<double>(c.tp()), fp = static_cast<double>(c.fp()),
               fn = static_cast<double>(c.fn()), tn = static_cast<double>(c.tn());
  const double total = tp + fp + fn + tn;
  m.accuracy = total > 0 ? (tp + tn) / total : 0.0;
  m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

// Hard-label metrics at `threshold` plus the two ranking metrics. When y
// holds a single class the ranking metrics are NaN; call roc_auc() directly
// to get the error instead.
inline MetricSet compute_metrics(std::span<const int> y, std::span<const double> score,
                                 double threshold = 0.5) {
  detail::check_scores(y, score);
  for (double s : score) {
    if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("scores must lie in [0, 1]");
  }
  MetricSet m = metrics_from_confusion(confusion_counts(y, score, threshold));
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    m.roc_auc = roc_auc(y, score);
  } catch (const UndefinedMetricError&) {
    m.roc_auc = nan;
  }
  try {
    m.pr_auc = average_precision(y, score);
  } catch (const UndefinedMetricError&) {
    m.pr_auc = nan;
  }
  return m;
}

}  // namespace scopepd
