#pragma once

// Synthetic cohorts on the real instrument schema. Every item is drawn from
// a discretized normal truncated to the item range; effect items have their
// PD-class mean shifted.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "scopepd/dataset.hpp"
#include "scopepd/parallel.hpp"
#include "scopepd/survey_scoring.hpp"

namespace scopepd::synth {

struct EffectSpec {
  std::string feature_name;  // item id
  double shift = 0.0;        // added to the PD-class mean, in item units
  double noise = 0.8;        // standard deviation of the effect item, both classes
};

struct CohortPlan {
  std::size_t n_pd = 400;
  std::size_t n_hc = 100;
  std::size_t n_prodromal = 0;
  std::size_t n_swedd = 0;
  std::vector<EffectSpec> effects;
  std::uint64_t seed = 42;
  // Baseline item distribution: mean at min + location * (max - min),
  // standard deviation spread * (max - min).
  double location = 0.3;
  double spread = 0.25;
  // Probability that any single item response is blanked.
  double missing_rate = 0.0;
};

// Tremor, bradykinesia and facial-expression items.
inline std::vector<EffectSpec> default_effects() {
  return {{"NP2TRMR", 2.5, 0.8}, {"NP3BRADY", 2.2, 0.8}, {"NP3FACXP", 2.0, 0.8}};
}

inline CohortPlan default_plan() {
  CohortPlan p;
  p.effects = default_effects();
  return p;
}

// Normal(mean, sd) truncated to [lo - 0.5, hi + 0.5] by rejection, rounded
// to the nearest integer and clamped to [lo, hi].
template <class Rng>
int draw_ordinal(Rng& rng, double mean, double sd, int lo, int hi) {
  if (sd <= 0) return std::clamp(static_cast<int>(std::lround(mean)), lo, hi);
  std::normal_distribution<double> dist(mean, sd);
  double v = mean;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    v = dist(rng);
    if (v >= lo - 0.5 && v <= hi + 0.5) break;
  }
  return std::clamp(static_cast<int>(std::lround(v)), lo, hi);
}

inline void validate(const CohortPlan& plan, const survey::Battery& battery) {
  if (plan.n_pd == 0 || plan.n_hc == 0) throw ConfigError("cohort plan needs PD and HC counts > 0");
  if (!(plan.missing_rate >= 0.0 && plan.missing_rate < 1.0)) {
    throw ConfigError("missing_rate must lie in [0, 1)");
  }
  if (!(plan.spread >= 0.0)) throw ConfigError("spread must be >= 0");
  for (const auto& e : plan.effects) {
    bool found = false;
    for (const auto& spec : battery) found = found || spec.find_item(e.feature_name) != nullptr;
    if (!found) {
      throw ConfigError("effect references unknown item '" + e.feature_name + "'");
    }
    if (!(e.noise >= 0.0)) throw ConfigError("effect noise for '" + e.feature_name + "' is negative");
  }
}

inline std::string participant_id(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "SYN%05zu", i + 1);
  return buf;
}

// Long-format rows, participants in cohort order PD, HC, Prodromal, SWEDD.
// Each participant draws from its own seeded stream.
inline std::vector<ResponseRow> generate_cohort(const CohortPlan& plan,
                                                const survey::Battery& battery) {
  for (const auto& spec : battery) survey::validate(spec);
  validate(plan, battery);

  std::vector<CohortLabel> cohorts;
  cohorts.insert(cohorts.end(), plan.n_pd, CohortLabel::PD);
  cohorts.insert(cohorts.end(), plan.n_hc, CohortLabel::HC);
  cohorts.insert(cohorts.end(), plan.n_prodromal, CohortLabel::Prodromal);
  cohorts.insert(cohorts.end(), plan.n_swedd, CohortLabel::SWEDD);

  std::vector<ResponseRow> rows;
  for (std::size_t p = 0; p < cohorts.size(); ++p) {
    std::mt19937_64 rng(derive_seed(plan.seed, p));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::string pid = participant_id(p);
    const bool is_pd = cohorts[p] == CohortLabel::PD;
    for (const auto& spec : battery) {
      for (const auto& item : spec.items) {
        const double range = item.max_value - item.min_value;
        double mean = item.min_value + plan.location * range;
        double sd = plan.spread * range;
        for (const auto& e : plan.effects) {
          if (e.feature_name != item.item_id) continue;
          sd = e.noise;
          if (is_pd) mean += e.shift;
        }
        std::optional<int> v = draw_ordinal(rng, mean, sd, item.min_value, item.max_value);
        if (plan.missing_rate > 0 && unit(rng) < plan.missing_rate) v.reset();
        rows.push_back({pid, cohorts[p], spec.name, item.item_id, v});
      }
    }
  }
  return rows;
}

inline nlohmann::json to_json(const CohortPlan& p) {
  nlohmann::json effects = nlohmann::json::array();
  for (const auto& e : p.effects) {
    effects.push_back({{"feature", e.feature_name}, {"shift", e.shift}, {"noise", e.noise}});
  }
  return {{"n_pd", p.n_pd},       {"n_hc", p.n_hc},           {"n_prodromal", p.n_prodromal},
          {"n_swedd", p.n_swedd}, {"seed", p.seed},           {"location", p.location},
          {"spread", p.spread},   {"missing_rate", p.missing_rate}, {"effects", effects}};
}

// Fields absent from `j` keep the values already in `base`.
inline CohortPlan plan_from_json(const nlohmann::json& j, CohortPlan base = default_plan()) {
  try {
    base.n_pd = j.value("n_pd", base.n_pd);
    base.n_hc = j.value("n_hc", base.n_hc);
    base.n_prodromal = j.value("n_prodromal", base.n_prodromal);
    base.n_swedd = j.value("n_swedd", base.n_swedd);
    base.seed = j.value("seed", base.seed);
    base.location = j.value("location", base.location);
    base.spread = j.value("spread", base.spread);
    base.missing_rate = j.value("missing_rate", base.missing_rate);
    if (j.contains("effects")) {
      base.effects.clear();
      for (const auto& e : j.at("effects")) {
        base.effects.push_back({e.at("feature").get<std::string>(), e.value("shift", 0.0),
                                e.value("noise", 0.8)});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth plan: ") + e.what());
  }
  return base;
}

}  // namespace scopepd::synth
