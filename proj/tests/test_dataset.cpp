#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "scopepd/dataset.hpp"

using namespace scopepd;

namespace {

constexpr double NA = kMissing;

FeatureMatrix make_matrix(std::size_t n, std::size_t d, std::vector<double> values,
                          std::vector<CohortLabel> labels = {}) {
  FeatureMatrix m;
  for (std::size_t j = 0; j < d; ++j) m.feature_names.push_back("f" + std::to_string(j));
  m.values = Matrix(n, d, std::move(values));
  for (std::size_t i = 0; i < n; ++i) {
    m.participant_ids.push_back("P" + std::to_string(i));
    m.labels.push_back(labels.empty() ? (i % 2 ? CohortLabel::PD : CohortLabel::HC) : labels[i]);
  }
  return m;
}

FeatureMatrix labelled(std::size_t n_pd, std::size_t n_hc, std::uint64_t seed = 1) {
  std::vector<CohortLabel> labels(n_pd, CohortLabel::PD);
  labels.insert(labels.end(), n_hc, CohortLabel::HC);
  std::mt19937_64 rng(seed);
  std::shuffle(labels.begin(), labels.end(), rng);
  std::vector<double> v(labels.size() * 2);
  for (auto& x : v) x = std::uniform_real_distribution<double>(0, 10)(rng);
  return make_matrix(labels.size(), 2, v, labels);
}

std::size_t count_pd(const FeatureMatrix& m) {
  return static_cast<std::size_t>(std::count(m.labels.begin(), m.labels.end(), CohortLabel::PD));
}

}  // namespace

TEST(DropMissing, FeatureThenSampleStage) {
  // Column f2 has three missing cells (over the threshold of one), row 2 has
  // one missing cell in a kept column.
  const auto m = make_matrix(5, 3, {1, 2, NA,  //
                                    3, 4, NA,  //
                                    NA, 5, 6,  //
                                    7, 8, NA,  //
                                    9, 1, 2});
  const auto out = drop_missing(m, 1);
  EXPECT_EQ(out.rows(), 4u);
  EXPECT_EQ(out.cols(), 2u);
  EXPECT_EQ(out.feature_names, (std::vector<std::string>{"f0", "f1"}));
  EXPECT_EQ(out.participant_ids, (std::vector<std::string>{"P0", "P1", "P3", "P4"}));
  EXPECT_FALSE(out.has_missing());
}

TEST(DropMissing, Idempotent) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(40 * 6);
    for (auto& x : v) x = std::bernoulli_distribution(0.05)(rng) ? NA : 1.0;
    const auto m = make_matrix(40, 6, v);
    const auto once = drop_missing(m, missing_threshold(m.rows(), 0.1));
    const auto twice = drop_missing(once, missing_threshold(m.rows(), 0.1));
    EXPECT_EQ(once.values, twice.values);
    EXPECT_EQ(once.feature_names, twice.feature_names);
    EXPECT_EQ(once.participant_ids, twice.participant_ids);
  }
}

TEST(DropMissing, EverythingMissingIsEmptyResult) {
  EXPECT_THROW(drop_missing(make_matrix(2, 1, {NA, NA}), 0), EmptyResultError);
}

TEST(DropMissing, ThresholdIsFloorOfFraction) {
  EXPECT_EQ(missing_threshold(1305, 0.1), 130u);
  EXPECT_EQ(missing_threshold(9, 0.1), 0u);
}

TEST(FilterCohorts, KeepsOnlyRequested) {
  auto m = make_matrix(4, 1, {1, 2, 3, 4},
                       {CohortLabel::PD, CohortLabel::SWEDD, CohortLabel::HC, CohortLabel::Prodromal});
  const auto out = filter_cohorts(m, {CohortLabel::PD, CohortLabel::HC});
  EXPECT_EQ(out.participant_ids, (std::vector<std::string>{"P0", "P2"}));
  EXPECT_THROW(filter_cohorts(m, {}), ValidationError);
  EXPECT_THROW(filter_cohorts(filter_cohorts(m, {CohortLabel::PD}), {CohortLabel::HC}),
               EmptyResultError);
}

TEST(BinaryTargets, RejectsUnfilteredCohort) {
  auto m = make_matrix(2, 1, {1, 2}, {CohortLabel::PD, CohortLabel::SWEDD});
  EXPECT_THROW(m.binary_targets(), ValidationError);
}

TEST(MinMax, HandExample) {
  const auto train = make_matrix(3, 2, {0, 5,  //
                                        5, 5,  //
                                        10, 5});
  const auto p = fit_minmax(train);
  const auto test = make_matrix(3, 2, {2.5, 7,  //
                                       -4, 5,   //
                                       20, 1});
  const auto out = apply_minmax(p, test);
  EXPECT_DOUBLE_EQ(out.values(0, 0), 0.25);
  EXPECT_EQ(out.values(1, 0), 0.0);
  EXPECT_EQ(out.values(2, 0), 1.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(out.values(i, 1), 0.0);
}

TEST(MinMax, TrainingDataMapsOntoUnitInterval) {
  std::mt19937_64 rng(21);
  std::vector<double> v(30 * 4);
  for (auto& x : v) x = std::normal_distribution<double>(3, 7)(rng);
  const auto m = make_matrix(30, 4, v);
  const auto out = apply_minmax(fit_minmax(m), m);
  for (std::size_t j = 0; j < 4; ++j) {
    double lo = 1, hi = 0;
    for (std::size_t i = 0; i < 30; ++i) {
      lo = std::min(lo, out.values(i, j));
      hi = std::max(hi, out.values(i, j));
    }
    EXPECT_EQ(lo, 0.0);
    EXPECT_DOUBLE_EQ(hi, 1.0);
  }
}

TEST(MinMax, MissingCellRejected) {
  EXPECT_THROW(fit_minmax(make_matrix(2, 1, {1, NA})), ValidationError);
}

TEST(MinMax, JsonRoundTrip) {
  const auto p = fit_minmax(make_matrix(2, 2, {0.1, -3, 0.7, 12.25}));
  const auto back = normalization_from_json(nlohmann::json::parse(to_json(p).dump()));
  EXPECT_EQ(back.feature_names, p.feature_names);
  EXPECT_EQ(back.min, p.min);
  EXPECT_EQ(back.max, p.max);
}

TEST(MinMax, FeatureMismatchRejected) {
  const auto p = fit_minmax(make_matrix(2, 2, {0, 1, 2, 3}));
  auto other = make_matrix(2, 2, {0, 1, 2, 3});
  std::swap(other.feature_names[0], other.feature_names[1]);
  EXPECT_THROW(apply_minmax(p, other), ValidationError);
}

TEST(Split, EightyTwenty) {
  const auto m = labelled(10, 10);
  const auto [train, test] = stratified_split(m, {42, 0.2, 5});
  EXPECT_EQ(train.rows(), 16u);
  EXPECT_EQ(test.rows(), 4u);
  EXPECT_EQ(count_pd(test), 2u);
  EXPECT_EQ(count_pd(train), 8u);
}

TEST(Split, PartitionAndProportions) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n_pd = std::uniform_int_distribution<std::size_t>(2, 200)(rng);
    const auto n_hc = std::uniform_int_distribution<std::size_t>(2, 200)(rng);
    const auto m = labelled(n_pd, n_hc, rng());
    const auto s = stratified_split_indices(m.binary_targets(), {rng(), 0.2, 5});
    std::vector<std::size_t> all = s.train;
    all.insert(all.end(), s.valid.begin(), s.valid.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) ASSERT_EQ(all[i], i);
    const auto y = m.binary_targets();
    std::size_t test_pd = 0;
    for (auto i : s.valid) test_pd += y[i];
    EXPECT_LE(std::abs(static_cast<double>(test_pd) - 0.2 * n_pd), 1.0);
    EXPECT_LE(std::abs(static_cast<double>(s.valid.size() - test_pd) - 0.2 * n_hc), 1.0);
  }
}

TEST(Split, DeterministicPerSeed) {
  const auto y = labelled(30, 12).binary_targets();
  const auto a = stratified_split_indices(y, {7, 0.2, 5});
  const auto b = stratified_split_indices(y, {7, 0.2, 5});
  const auto c = stratified_split_indices(y, {8, 0.2, 5});
  EXPECT_EQ(a.valid, b.valid);
  EXPECT_NE(a.valid, c.valid);
}

TEST(Split, TooSmallClassRejected) {
  EXPECT_THROW(stratified_split_indices({1, 0, 0, 0}, {42, 0.2, 5}), ValidationError);
  EXPECT_THROW(stratified_split_indices({1, 1, 0, 0}, {42, 1.0, 5}), ValidationError);
}

TEST(KFold, FoldComposition) {
  const auto y = labelled(10, 5).binary_targets();
  const auto folds = stratified_kfold_indices(y, {42, 0.2, 5});
  ASSERT_EQ(folds.size(), 5u);
  for (const auto& f : folds) {
    std::size_t pd = 0;
    for (auto i : f.valid) pd += y[i];
    EXPECT_EQ(pd, 2u);
    EXPECT_EQ(f.valid.size() - pd, 1u);
  }
}

TEST(KFold, ValidationSetsPartitionSamples) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto m = labelled(std::uniform_int_distribution<std::size_t>(5, 80)(rng),
                            std::uniform_int_distribution<std::size_t>(5, 80)(rng), rng());
    const auto y = m.binary_targets();
    const auto folds = stratified_kfold_indices(y, {rng(), 0.2, 5});
    std::vector<int> seen(y.size(), 0);
    std::size_t lo = y.size(), hi = 0;
    for (const auto& f : folds) {
      lo = std::min(lo, f.valid.size());
      hi = std::max(hi, f.valid.size());
      for (auto i : f.valid) ++seen[i];
      EXPECT_EQ(f.train.size() + f.valid.size(), y.size());
      std::vector<std::size_t> both;
      std::set_intersection(f.train.begin(), f.train.end(), f.valid.begin(), f.valid.end(),
                            std::back_inserter(both));
      EXPECT_TRUE(both.empty());
    }
    EXPECT_LE(hi - lo, 1u);
    for (int s : seen) EXPECT_EQ(s, 1);
  }
}

TEST(KFold, MinoritySmallerThanKRejected) {
  EXPECT_THROW(stratified_kfold_indices(labelled(10, 4).binary_targets(), {42, 0.2, 5}),
               ValidationError);
}

TEST(WideCsv, RoundTripPreservesValuesAndMissing) {
  const auto m = make_matrix(3, 2, {0.1, NA, 1.0 / 3.0, 2, -7.5, 1e-9});
  std::stringstream ss;
  write_wide(ss, m);
  const auto back = read_wide(ss);
  EXPECT_EQ(back.feature_names, m.feature_names);
  EXPECT_EQ(back.participant_ids, m.participant_ids);
  EXPECT_EQ(back.labels, m.labels);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      if (is_missing(m.values(i, j))) {
        EXPECT_TRUE(is_missing(back.values(i, j)));
      } else {
        EXPECT_EQ(back.values(i, j), m.values(i, j));
      }
    }
  }
}

TEST(WideCsv, BadHeaderRejected) {
  std::stringstream ss("id,cohort,f0\nP1,PD,1\n");
  EXPECT_THROW(read_wide(ss), ValidationError);
}

TEST(Responses, RoundTripAndGrouping) {
  const std::vector<ResponseRow> rows{{"A", CohortLabel::PD, "EPW", "ESS1", 2},
                                      {"A", CohortLabel::PD, "EPW", "ESS2", std::nullopt},
                                      {"B", CohortLabel::HC, "EPW", "ESS1", 0},
                                      {"A", CohortLabel::PD, "GDS", "GDSSATIS", 1}};
  std::stringstream ss;
  write_responses(ss, rows);
  const auto back = read_responses(ss);
  ASSERT_EQ(back.size(), rows.size());
  EXPECT_FALSE(back[1].value.has_value());
  const auto recs = group_records(back);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].participant_id, "A");
  EXPECT_EQ(recs[0].values.size(), 2u);
  EXPECT_EQ(recs[1].participant_id, "B");
  EXPECT_EQ(recs[2].instrument, "GDS");
}

TEST(Responses, NonIntegerRejected) {
  EXPECT_THROW(parse_response_value("2.5"), ValidationError);
  EXPECT_EQ(parse_response_value("NA"), std::nullopt);
}
