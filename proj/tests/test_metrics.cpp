#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles/metric_oracles.hpp"
#include "scopepd/metrics.hpp"

using namespace scopepd;

namespace {

struct Scored {
  std::vector<int> y;
  std::vector<double> s;
};

// Scores on a coarse grid so ties are common.
Scored random_scored(std::mt19937_64& rng, std::size_t n, int grid) {
  Scored out;
  std::uniform_int_distribution<int> g(0, grid);
  for (std::size_t i = 0; i < n; ++i) {
    out.y.push_back(std::bernoulli_distribution(0.4)(rng));
    out.s.push_back(static_cast<double>(g(rng)) / grid);
  }
  out.y[0] = 1;
  out.y[1] = 0;
  return out;
}

}  // namespace

TEST(RocAuc, MatchesPairwiseOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const auto d = random_scored(rng, std::uniform_int_distribution<std::size_t>(2, 60)(rng),
                                 std::uniform_int_distribution<int>(1, 20)(rng));
    EXPECT_NEAR(roc_auc(d.y, d.s), oracle::pairwise_auc(d.y, d.s), 1e-12);
  }
}

TEST(AveragePrecision, MatchesThresholdSweepOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const auto d = random_scored(rng, std::uniform_int_distribution<std::size_t>(2, 60)(rng),
                                 std::uniform_int_distribution<int>(1, 20)(rng));
    EXPECT_NEAR(average_precision(d.y, d.s), oracle::threshold_sweep_ap(d.y, d.s), 1e-12);
  }
}

TEST(RocAuc, AllTiedIsHalf) {
  const std::vector<int> y{0, 1, 0, 1, 1};
  const std::vector<double> s(5, 0.3);
  EXPECT_DOUBLE_EQ(roc_auc(y, s), 0.5);
}

TEST(RankingMetrics, PerfectSeparation) {
  const std::vector<int> y{0, 0, 1, 1, 1};
  const std::vector<double> s{0.1, 0.2, 0.7, 0.8, 0.9};
  EXPECT_DOUBLE_EQ(roc_auc(y, s), 1.0);
  EXPECT_DOUBLE_EQ(average_precision(y, s), 1.0);
}

TEST(RankingMetrics, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = random_scored(rng, 40, 10);
    std::vector<double> t(d.s.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::exp(3 * d.s[i]) / 30.0;
    EXPECT_DOUBLE_EQ(roc_auc(d.y, d.s), roc_auc(d.y, t));
    EXPECT_DOUBLE_EQ(average_precision(d.y, d.s), average_precision(d.y, t));
  }
}

TEST(RankingMetrics, SingleClassIsUndefined) {
  const std::vector<int> pos{1, 1};
  const std::vector<int> neg{0, 0};
  const std::vector<double> s{0.2, 0.7};
  EXPECT_THROW(roc_auc(pos, s), UndefinedMetricError);
  EXPECT_THROW(roc_auc(neg, s), UndefinedMetricError);
  EXPECT_THROW(average_precision(neg, s), UndefinedMetricError);
  const auto m = compute_metrics(neg, s);
  EXPECT_TRUE(std::isnan(m.roc_auc));
  EXPECT_TRUE(std::isnan(m.pr_auc));
}

TEST(Confusion, ThresholdIsStrict) {
  const std::vector<int> y{0, 1, 1, 0};
  const std::vector<double> s{0.5, 0.5000001, 0.9, 0.1};
  const auto c = confusion_counts(y, s);
  EXPECT_EQ(c.tn(), 2u);
  EXPECT_EQ(c.tp(), 2u);
  EXPECT_EQ(c.fp(), 0u);
  EXPECT_EQ(c.fn(), 0u);
}

TEST(Confusion, HardMetricsByHand) {
  // tp 3, fp 1, fn 2, tn 4
  const std::vector<int> y{1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
  const std::vector<double> s{0.9, 0.8, 0.7, 0.2, 0.1, 0.6, 0.4, 0.3, 0.2, 0.1};
  const auto m = compute_metrics(y, s);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.7);
  EXPECT_DOUBLE_EQ(m.precision, 0.75);
  EXPECT_DOUBLE_EQ(m.recall, 0.6);
  EXPECT_NEAR(m.f1, 2 * 0.75 * 0.6 / 1.35, 1e-15);
}

TEST(Confusion, NormalizedRowsSumToOne) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = random_scored(rng, 30, 7);
    const auto n = normalize_rows(confusion_counts(d.y, d.s));
    EXPECT_NEAR(n[0][0] + n[0][1], 1.0, 1e-12);
    EXPECT_NEAR(n[1][0] + n[1][1], 1.0, 1e-12);
  }
}

TEST(Confusion, MetricsStayInUnitInterval) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = random_scored(rng, 25, 5);
    const auto m = compute_metrics(d.y, d.s);
    for (double v : {m.accuracy, m.precision, m.recall, m.f1, m.roc_auc, m.pr_auc}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Confusion, RejectsBadInput) {
  EXPECT_THROW(confusion_counts(std::vector<int>{0, 2}, std::vector<double>{0, 1}),
               ValidationError);
  EXPECT_THROW(compute_metrics(std::vector<int>{0, 1}, std::vector<double>{0, 1.5}),
               ValidationError);
  EXPECT_THROW(roc_auc(std::vector<int>{0, 1}, std::vector<double>{0}), ValidationError);
}
