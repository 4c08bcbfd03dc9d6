#include <gtest/gtest.h>

#include <map>
#include <random>
#include <cmath>
#include <set>

#include "scopepd/dataset.hpp"
#include "scopepd/survey_scoring.hpp"

using namespace scopepd;
using namespace scopepd::survey;

namespace {

const Battery& battery() {
  static const Battery b = load_battery_file(SCOPEPD_CONFIG_DIR "/instruments.json");
  return b;
}

const InstrumentSpec& instrument(const std::string& name) {
  for (const auto& s : battery()) {
    if (s.name == name) return s;
  }
  throw std::runtime_error("no instrument " + name);
}

ResponseRecord constant_record(const InstrumentSpec& spec, int value) {
  ResponseRecord r{"P1", CohortLabel::PD, spec.name, {}};
  for (const auto& it : spec.items) r.values[it.item_id] = value;
  return r;
}

std::optional<double> feature(const FeatureValues& fv, const std::string& name) {
  for (const auto& f : fv) {
    if (f.name == name) return f.value;
  }
  throw std::runtime_error("no feature " + name);
}

}  // namespace

TEST(ReverseItem, EndpointMapsToOppositeEndpoint) {
  EXPECT_EQ(reverse_item(1, {"X", 1, 4, true}), 4);
}

TEST(ReverseItem, MidpointIsFixed) {
  EXPECT_EQ(reverse_item(2, {"X", 0, 4, true}), 2);
}

TEST(ReverseItem, ThreeOnZeroToFour) {
  const ItemSpec s{"X", 0, 4, true};
  EXPECT_EQ(reverse_item(3, s), 1);
  EXPECT_EQ(reverse_item(reverse_item(3, s), s), 3);
}

TEST(ReverseItem, OutOfRangeNamesItem) {
  try {
    reverse_item(7, {"STAIAD1", 1, 4, true});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("STAIAD1"), std::string::npos);
  }
}

TEST(ReverseItem, InvolutionOverRandomRanges) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const int lo = std::uniform_int_distribution<int>(-5, 5)(rng);
    const int hi = lo + std::uniform_int_distribution<int>(1, 10)(rng);
    const ItemSpec s{"X", lo, hi, true};
    for (int v = lo; v <= hi; ++v) EXPECT_EQ(reverse_item(reverse_item(v, s), s), v);
  }
}

TEST(ScoreInstrument, EpwAllZero) {
  const auto fv = score_instrument(instrument("EPW"), constant_record(instrument("EPW"), 0));
  ASSERT_EQ(fv.size(), 1u);
  EXPECT_EQ(fv[0].name, "EPW_total");
  EXPECT_EQ(*fv[0].value, 0.0);
}

TEST(ScoreInstrument, StaiAllOnesMatchesHandKey) {
  // Standard form Y reverse-keyed items.
  const std::set<int> reversed{1, 2, 5, 8, 10, 11, 15, 16, 19, 20,
                               21, 23, 26, 27, 30, 33, 34, 36, 39};
  EXPECT_EQ(reversed.size(), 19u);
  double state = 0, trait = 0;
  for (int i = 1; i <= 40; ++i) {
    const int v = reversed.count(i) ? 1 + 4 - 1 : 1;
    (i <= 20 ? state : trait) += v;
  }
  const auto& stai = instrument("STAI");
  const auto fv = score_instrument(stai, constant_record(stai, 1));
  EXPECT_EQ(*feature(fv, "STAI_state"), state);
  EXPECT_EQ(*feature(fv, "STAI_trait"), trait);
  EXPECT_EQ(state, 50.0);
  EXPECT_EQ(trait, 47.0);
}

TEST(ScoreInstrument, StaiRandomRecordsMatchOracle) {
  const std::set<int> reversed{1, 2, 5, 8, 10, 11, 15, 16, 19, 20,
                               21, 23, 26, 27, 30, 33, 34, 36, 39};
  const auto& stai = instrument("STAI");
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    ResponseRecord r{"P", CohortLabel::HC, "STAI", {}};
    double state = 0, trait = 0;
    for (int i = 1; i <= 40; ++i) {
      const int v = std::uniform_int_distribution<int>(1, 4)(rng);
      r.values["STAIAD" + std::to_string(i)] = v;
      (i <= 20 ? state : trait) += reversed.count(i) ? 5 - v : v;
    }
    const auto fv = score_instrument(stai, r);
    EXPECT_EQ(*feature(fv, "STAI_state"), state);
    EXPECT_EQ(*feature(fv, "STAI_trait"), trait);
  }
}

TEST(ScoreInstrument, RemDropsParkism) {
  const auto& rem = instrument("REM");
  ASSERT_NE(rem.find_item("PARKISM"), nullptr);
  const auto fv = score_instrument(rem, constant_record(rem, 1));
  EXPECT_EQ(fv.size(), 20u);
  for (const auto& f : fv) EXPECT_EQ(f.name.find("PARKISM"), std::string::npos);
}

TEST(ScoreInstrument, MissingItemMakesSumMissing) {
  const auto& gds = instrument("GDS");
  auto r = constant_record(gds, 1);
  r.values.begin()->second.reset();
  EXPECT_FALSE(score_instrument(gds, r)[0].value.has_value());
  r.values.erase(r.values.begin());
  EXPECT_FALSE(score_instrument(gds, r)[0].value.has_value());
}

TEST(ScoreInstrument, OutOfRangeValueRejected) {
  const auto& epw = instrument("EPW");
  auto r = constant_record(epw, 0);
  r.values["ESS3"] = 4;
  EXPECT_THROW(score_instrument(epw, r), ValidationError);
}

TEST(ScoreInstrument, UnknownRuleItemIsConfigError) {
  InstrumentSpec s{"T", InstrumentKind::Subjective, {{"A", 0, 1, false}},
                   DropThenPassThrough{{"B"}}, false};
  EXPECT_THROW(validate(s), ConfigError);
  ResponseRecord r{"P", CohortLabel::HC, "T", {{"A", 1}}};
  EXPECT_THROW(score_instrument(s, r), ConfigError);
}

TEST(ScoreInstrument, OverlappingGroupsRejected) {
  InstrumentSpec s{"T", InstrumentKind::Subjective,
                   {{"A", 0, 1, false}, {"B", 0, 1, false}},
                   SumGroups{{{"g1", {"A", "B"}}, {"g2", {"B"}}}}, false};
  EXPECT_THROW(validate(s), ConfigError);
}

TEST(Hvlt, PerfectPerformance) {
  const auto f = hvlt_composites({12, 12, 12, 12, 12, 0, 5});
  EXPECT_EQ(f[0], 36);
  EXPECT_EQ(f[1], 12);
  EXPECT_EQ(f[2], 100);
  EXPECT_EQ(f[3], 12);
}

TEST(Hvlt, ZeroCaseUsesDenominatorGuard) {
  const auto f = hvlt_composites({0, 0, 0, 0, 0, 0, 0});
  for (double v : f) EXPECT_EQ(v, 0.0);
}

TEST(Hvlt, HandArithmetic) {
  const auto f = hvlt_composites({8, 10, 9, 7, 11, 2, 0});
  EXPECT_EQ(f[0], 27);
  EXPECT_EQ(f[1], 7);
  EXPECT_DOUBLE_EQ(f[2], 70);
  EXPECT_EQ(f[3], 9);
}

TEST(Hvlt, OutOfRangeRejected) {
  EXPECT_THROW(hvlt_composites({13, 0, 0, 0, 0, 0, 0}), ValidationError);
  EXPECT_THROW(hvlt_composites({0, 0, 0, 0, 0, -1, 0}), ValidationError);
}

TEST(Hvlt, ConfigMappingFeedsComposites) {
  const auto& hvlt = instrument("HVLT");
  ResponseRecord r{"P", CohortLabel::PD, "HVLT",
                   {{"HVLTRT1", 8}, {"HVLTRT2", 10}, {"HVLTRT3", 9}, {"HVLTRDLY", 7},
                    {"HVLTREC", 11}, {"HVLTFPRL", 2}, {"HVLTFPUN", 4}}};
  const auto fv = score_instrument(hvlt, r);
  ASSERT_EQ(fv.size(), 4u);
  EXPECT_EQ(*fv[0].value, 27);
  EXPECT_EQ(*fv[3].value, 9);
}

TEST(AlignDirection, MocaTotalBestMapsToZero) {
  const auto& moca = instrument("MOCA");
  ASSERT_TRUE(moca.flip_for_alignment);
  FeatureValues fv{{"MCATOT", 30.0}};
  EXPECT_EQ(*align_direction(fv, moca)[0].value, 0.0);
}

TEST(AlignDirection, UpdrsThreeUnchanged) {
  const auto& u3 = instrument("MDS-UPDRS III");
  EXPECT_FALSE(u3.flip_for_alignment);
  const auto fv = score_instrument(u3, constant_record(u3, 3));
  const auto aligned = align_direction(fv, u3);
  for (std::size_t i = 0; i < fv.size(); ++i) EXPECT_EQ(*aligned[i].value, *fv[i].value);
}

TEST(AlignDirection, SdmtZeroMapsToMaximum) {
  const auto& sdmt = instrument("SDMT");
  const auto fv = align_direction(score_instrument(sdmt, constant_record(sdmt, 0)), sdmt);
  EXPECT_EQ(*fv[0].value, feature_ranges(sdmt)[0].max);
}

TEST(AlignDirection, FlipInvertsOrdering) {
  std::mt19937_64 rng(3);
  for (const auto& spec : battery()) {
    if (!spec.flip_for_alignment) continue;
    for (int trial = 0; trial < 20; ++trial) {
      ResponseRecord a{"A", CohortLabel::HC, spec.name, {}}, b{"B", CohortLabel::HC, spec.name, {}};
      for (const auto& it : spec.items) {
        std::uniform_int_distribution<int> d(it.min_value, it.max_value);
        a.values[it.item_id] = d(rng);
        b.values[it.item_id] = d(rng);
      }
      const auto ra = score_instrument(spec, a), rb = score_instrument(spec, b);
      const auto fa = align_direction(ra, spec), fb = align_direction(rb, spec);
      for (std::size_t i = 0; i < ra.size(); ++i) {
        const double before = *ra[i].value - *rb[i].value;
        const double after = *fa[i].value - *fb[i].value;
        EXPECT_NEAR(after, -before, 1e-9 * (1 + std::abs(before)));
      }
    }
  }
}

TEST(Battery, FlipFlagsFollowKind) {
  for (const auto& spec : battery()) {
    if (spec.kind == InstrumentKind::Subjective) {
      EXPECT_FALSE(spec.flip_for_alignment) << spec.name;
    } else {
      EXPECT_EQ(spec.flip_for_alignment, spec.name != "MDS-UPDRS III") << spec.name;
    }
  }
}

TEST(Battery, FifteenInstruments) {
  EXPECT_EQ(battery().size(), 15u);
  EXPECT_EQ(select(battery(), InstrumentKind::Subjective).size(), 8u);
  EXPECT_EQ(select(battery(), InstrumentKind::Objective).size(), 7u);
}

// Per-instrument feature counts: EPW 1, GDS 1, UPDRS I 7, UPDRS II 13,
// REM 20 after the drop, SCOPA-AUT 21, STAI 2, QUIP 13 -> 78; BJLO 1,
// HVLT 4, LNS 1, UPDRS III 32, MOCA 27, MSF 1 after the drop, SDMT 1 -> 67.
TEST(Battery, FeatureCountsPerKind) {
  const std::map<std::string, std::size_t> expected{
      {"EPW", 1},  {"GDS", 1},         {"MDS-UPDRS I", 7},    {"MDS-UPDRS II", 13},
      {"REM", 20}, {"SCOPA-AUT", 21},  {"STAI", 2},           {"QUIP", 13},
      {"BJLO", 1}, {"HVLT", 4},        {"LNS", 1},            {"MDS-UPDRS III", 32},
      {"MOCA", 27}, {"MSF", 1},        {"SDMT", 1}};
  for (const auto& spec : battery()) {
    EXPECT_EQ(feature_ranges(spec).size(), expected.at(spec.name)) << spec.name;
  }
  EXPECT_EQ(feature_count(select(battery(), InstrumentKind::Subjective)), 78u);
  EXPECT_EQ(feature_count(select(battery(), InstrumentKind::Objective)), 67u);
}

TEST(Battery, CompleteParticipantAssemblesWithoutMissing) {
  std::vector<ResponseRecord> recs;
  for (const auto& spec : battery()) {
    auto r = constant_record(spec, 0);
    r.participant_id = "P1";
    for (const auto& it : spec.items) r.values[it.item_id] = it.min_value;
    recs.push_back(r);
  }
  const auto m = assemble_matrix(battery(), recs);
  EXPECT_EQ(m.rows(), 1u);
  EXPECT_EQ(m.cols(), 145u);
  EXPECT_FALSE(m.has_missing());
}

TEST(Battery, SumOraclesOnRandomRecords) {
  const auto& epw = instrument("EPW");
  const auto& gds = instrument("GDS");
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    for (const auto* spec : {&epw, &gds}) {
      ResponseRecord r{"P", CohortLabel::HC, spec->name, {}};
      double sum = 0;
      for (const auto& it : spec->items) {
        const int v = std::uniform_int_distribution<int>(it.min_value, it.max_value)(rng);
        r.values[it.item_id] = v;
        sum += v;
      }
      EXPECT_EQ(*score_instrument(*spec, r)[0].value, sum);
    }
  }
}

TEST(Battery, RejectsUnknownRuleType) {
  const auto doc = nlohmann::json::parse(R"({"instruments":[{"name":"X","kind":"subjective",
      "rule":{"type":"median"},"items":[{"id":"A","min":0,"max":1}]}]})");
  EXPECT_THROW(load_battery(doc), ConfigError);
}

TEST(Battery, RejectsFlippedSubjective) {
  const auto doc = nlohmann::json::parse(R"({"instruments":[{"name":"X","kind":"subjective",
      "flip_for_alignment":true,"rule":{"type":"pass_through"},
      "items":[{"id":"A","min":0,"max":1}]}]})");
  EXPECT_THROW(load_battery(doc), ConfigError);
}
