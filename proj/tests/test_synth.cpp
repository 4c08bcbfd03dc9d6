#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "scopepd/evaluation.hpp"
#include "scopepd/synth.hpp"

using namespace scopepd;

namespace {

const survey::Battery& battery() {
  static const auto b = survey::load_battery_file(SCOPEPD_CONFIG_DIR "/instruments.json");
  return b;
}

FeatureMatrix scored(const synth::CohortPlan& plan) {
  const auto rows = synth::generate_cohort(plan, battery());
  auto m = assemble_matrix(battery(), group_records(rows));
  m = filter_cohorts(m, {CohortLabel::PD, CohortLabel::HC});
  return drop_missing(m, missing_threshold(m.rows(), 0.1));
}

std::map<CohortLabel, double> item_means(const std::vector<ResponseRow>& rows,
                                         const std::string& item) {
  std::map<CohortLabel, double> sum, count;
  for (const auto& r : rows) {
    if (r.item_id != item || !r.value) continue;
    sum[r.cohort] += *r.value;
    count[r.cohort] += 1;
  }
  for (auto& [c, s] : sum) s /= count[c];
  return sum;
}

}  // namespace

TEST(Synth, ByteIdenticalForSameSeed) {
  auto plan = synth::default_plan();
  plan.n_pd = 30;
  plan.n_hc = 10;
  std::ostringstream a, b, c;
  write_responses(a, synth::generate_cohort(plan, battery()));
  write_responses(b, synth::generate_cohort(plan, battery()));
  plan.seed = 7;
  write_responses(c, synth::generate_cohort(plan, battery()));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str(), c.str());
}

TEST(Synth, CountsIdsAndRanges) {
  auto plan = synth::default_plan();
  plan.n_pd = 5;
  plan.n_hc = 3;
  plan.n_prodromal = 2;
  plan.n_swedd = 1;
  const auto rows = synth::generate_cohort(plan, battery());
  std::size_t items = 0;
  for (const auto& s : battery()) items += s.items.size();
  ASSERT_EQ(rows.size(), 11 * items);
  EXPECT_EQ(rows.front().participant_id, "SYN00001");
  EXPECT_EQ(rows.back().participant_id, "SYN00011");
  EXPECT_EQ(rows.back().cohort, CohortLabel::SWEDD);
  for (const auto& r : rows) {
    ASSERT_TRUE(r.value.has_value());
    for (const auto& s : battery()) {
      if (s.name != r.instrument) continue;
      const auto* it = s.find_item(r.item_id);
      ASSERT_NE(it, nullptr);
      EXPECT_GE(*r.value, it->min_value);
      EXPECT_LE(*r.value, it->max_value);
    }
  }
}

TEST(Synth, EffectShiftsOnlyTheTargetItem) {
  auto plan = synth::default_plan();
  plan.n_pd = 300;
  plan.n_hc = 300;
  const auto rows = synth::generate_cohort(plan, battery());
  const auto tremor = item_means(rows, "NP2TRMR");
  EXPECT_GT(tremor.at(CohortLabel::PD) - tremor.at(CohortLabel::HC), 1.5);
  const auto speech = item_means(rows, "NP2SPCH");
  EXPECT_LT(std::abs(speech.at(CohortLabel::PD) - speech.at(CohortLabel::HC)), 0.3);
}

TEST(Synth, MissingRateIsApproximatelyHonoured) {
  auto plan = synth::default_plan();
  plan.n_pd = 40;
  plan.n_hc = 40;
  plan.missing_rate = 0.05;
  const auto rows = synth::generate_cohort(plan, battery());
  double missing = 0;
  for (const auto& r : rows) missing += !r.value;
  EXPECT_NEAR(missing / static_cast<double>(rows.size()), 0.05, 0.01);
}

TEST(Synth, UnknownEffectItemIsConfigError) {
  auto plan = synth::default_plan();
  plan.effects.push_back({"NOT_AN_ITEM", 1.0, 0.8});
  EXPECT_THROW(synth::generate_cohort(plan, battery()), ConfigError);
  plan = synth::default_plan();
  plan.n_hc = 0;
  EXPECT_THROW(synth::generate_cohort(plan, battery()), ConfigError);
}

TEST(Synth, PlanJsonRoundTrip) {
  auto plan = synth::default_plan();
  plan.n_swedd = 4;
  plan.seed = 99;
  plan.missing_rate = 0.02;
  const auto back = synth::plan_from_json(synth::to_json(plan));
  EXPECT_EQ(back.n_swedd, 4u);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.missing_rate, 0.02);
  ASSERT_EQ(back.effects.size(), 3u);
  EXPECT_EQ(back.effects[1].feature_name, "NP3BRADY");
  EXPECT_EQ(back.effects[1].shift, 2.2);
}

TEST(Synth, NoEffectMeansChanceLevelRanking) {
  auto plan = synth::default_plan();
  plan.effects.clear();
  const auto m = scored(plan);
  Hyperparams p;
  p.n_trees = 100;
  p.n_threads = 0;
  const auto cv = cross_validate(ModelFamily::RF, p, m, {42, 0.2, 5}, 1);
  const double auc = roc_auc(m.binary_targets(), cv.oof_scores);
  EXPECT_NEAR(auc, 0.5, 0.07);
}

TEST(Synth, DefaultEffectsAreLearnable) {
  const auto m = scored(synth::default_plan());
  EXPECT_EQ(m.rows(), 500u);
  EXPECT_EQ(m.cols(), 145u);
  Hyperparams p;
  p.n_trees = 100;
  p.n_threads = 0;
  const auto cv = cross_validate(ModelFamily::RF, p, m, {42, 0.2, 5}, 1);
  const auto met = compute_metrics(m.binary_targets(), cv.oof_scores);
  EXPECT_GE(met.accuracy, 0.95);
}
