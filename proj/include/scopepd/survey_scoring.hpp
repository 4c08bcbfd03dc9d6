#pragma once

// Conversion of raw questionnaire / assessment responses into engineered
// features: per-item reversal, instrument-level scoring rules and direction
// alignment (higher value = worse condition).

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "scopepd/cohort.hpp"
#include "scopepd/error.hpp"

namespace scopepd::survey {

struct ItemSpec {
  std::string item_id;
  int min_value = 0;
  int max_value = 1;
  bool reverse = false;
};

// Scoring rules. Feature names are part of the rule so that the output
// schema is fully described by the instrument config.
struct SumAll {
  std::string feature;
};
struct PassThrough {};
struct SumGroups {
  struct Group {
    std::string feature;
    std::vector<std::string> items;
  };
  std::vector<Group> groups;
};
// Item ids of the seven raw HVLT scores, in canonical order.
struct HvltComposites {
  std::string trial1, trial2, trial3, delayed_recall, recognition_true_pos,
      recognition_false_pos, unused;
  std::array<std::string, 4> features{"HVLT_total_recall", "HVLT_delayed_recall",
                                      "HVLT_retention", "HVLT_discrimination"};
  std::array<const std::string*, 7> ordered() const {
    return {&trial1, &trial2, &trial3, &delayed_recall, &recognition_true_pos,
            &recognition_false_pos, &unused};
  }
};
struct DropThenPassThrough {
  std::vector<std::string> dropped;
};
struct SingleScore {};

using ScoringRule = std::variant<SumAll, PassThrough, SumGroups, HvltComposites,
                                 DropThenPassThrough, SingleScore>;

enum class InstrumentKind { Subjective, Objective };

struct InstrumentSpec {
  std::string name;
  InstrumentKind kind = InstrumentKind::Subjective;
  std::vector<ItemSpec> items;
  ScoringRule rule = PassThrough{};
  bool flip_for_alignment = false;

  const ItemSpec* find_item(const std::string& id) const {
    for (const auto& it : items) {
      if (it.item_id == id) return &it;
    }
    return nullptr;
  }
};

// One participant's answers to one instrument. Absent keys and nullopt
// values are both treated as missing.
struct ResponseRecord {
  std::string participant_id;
  CohortLabel cohort = CohortLabel::HC;
  std::string instrument;
  std::map<std::string, std::optional<int>> values;
};

struct FeatureRange {
  std::string name;
  double min = 0.0;
  double max = 0.0;
};

struct FeatureValue {
  std::string name;
  std::optional<double> value;
};
using FeatureValues = std::vector<FeatureValue>;

inline int reverse_item(int value, const ItemSpec& spec) {
  if (value < spec.min_value || value > spec.max_value) {
    throw ValidationError("value " + std::to_string(value) + " for item '" +
                          spec.item_id + "' outside [" +
                          std::to_string(spec.min_value) + ", " +
                          std::to_string(spec.max_value) + "]");
  }
  return spec.min_value + spec.max_value - value;
}

// Checks item and rule consistency; throws ConfigError.
inline void validate(const InstrumentSpec& spec) {
  std::set<std::string> ids;
  for (const auto& it : spec.items) {
    if (it.min_value >= it.max_value) {
      throw ConfigError(spec.name + ": item '" + it.item_id +
                        "' must have min_value < max_value");
    }
    if (!ids.insert(it.item_id).second) {
      throw ConfigError(spec.name + ": duplicate item '" + it.item_id + "'");
    }
  }
  if (spec.kind == InstrumentKind::Subjective && spec.flip_for_alignment) {
    throw ConfigError(spec.name + ": subjective instruments are not flipped");
  }
  auto require = [&](const std::string& id) {
    if (!ids.count(id)) {
      throw ConfigError(spec.name + ": rule references unknown item '" + id + "'");
    }
  };
  std::visit(
      [&](const auto& rule) {
        using R = std::decay_t<decltype(rule)>;
        if constexpr (std::is_same_v<R, SumGroups>) {
          std::set<std::string> seen;
          for (const auto& g : rule.groups) {
            for (const auto& id : g.items) {
              require(id);
              if (!seen.insert(id).second) {
                throw ConfigError(spec.name + ": item '" + id +
                                  "' appears in more than one group");
              }
            }
          }
        } else if constexpr (std::is_same_v<R, HvltComposites>) {
          for (const std::string* id : rule.ordered()) require(*id);
        } else if constexpr (std::is_same_v<R, DropThenPassThrough>) {
          for (const auto& id : rule.dropped) require(id);
        } else if constexpr (std::is_same_v<R, SingleScore>) {
          if (spec.items.size() != 1) {
            throw ConfigError(spec.name + ": single-score rule needs exactly one item");
          }
        } else if constexpr (std::is_same_v<R, SumAll>) {
          if (rule.feature.empty()) {
            throw ConfigError(spec.name + ": sum rule needs a feature name");
          }
        }
      },
      spec.rule);
}

namespace detail {

inline const ItemSpec& item_or_throw(const InstrumentSpec& spec, const std::string& id) {
  const ItemSpec* it = spec.find_item(id);
  if (!it) throw ConfigError(spec.name + ": rule references unknown item '" + id + "'");
  return *it;
}

}  // namespace detail

// Output features of an instrument with their theoretical ranges, derived
// from the item ranges only (never from data).
inline std::vector<FeatureRange> feature_ranges(const InstrumentSpec& spec) {
  std::vector<FeatureRange> out;
  std::visit(
      [&](const auto& rule) {
        using R = std::decay_t<decltype(rule)>;
        if constexpr (std::is_same_v<R, SumAll>) {
          double lo = 0, hi = 0;
          for (const auto& it : spec.items) {
            lo += it.min_value;
            hi += it.max_value;
          }
          out.push_back({rule.feature, lo, hi});
        } else if constexpr (std::is_same_v<R, PassThrough> ||
                             std::is_same_v<R, SingleScore>) {
          for (const auto& it : spec.items) {
            out.push_back({it.item_id, double(it.min_value), double(it.max_value)});
          }
        } else if constexpr (std::is_same_v<R, DropThenPassThrough>) {
          for (const auto& it : spec.items) {
            if (std::find(rule.dropped.begin(), rule.dropped.end(), it.item_id) ==
                rule.dropped.end()) {
              out.push_back({it.item_id, double(it.min_value), double(it.max_value)});
            }
          }
        } else if constexpr (std::is_same_v<R, SumGroups>) {
          for (const auto& g : rule.groups) {
            double lo = 0, hi = 0;
            for (const auto& id : g.items) {
              const auto& it = detail::item_or_throw(spec, id);
              lo += it.min_value;
              hi += it.max_value;
            }
            out.push_back({g.feature, lo, hi});
          }
        } else if constexpr (std::is_same_v<R, HvltComposites>) {
          const auto& t1 = detail::item_or_throw(spec, rule.trial1);
          const auto& t2 = detail::item_or_throw(spec, rule.trial2);
          const auto& t3 = detail::item_or_throw(spec, rule.trial3);
          const auto& dr = detail::item_or_throw(spec, rule.delayed_recall);
          const auto& tp = detail::item_or_throw(spec, rule.recognition_true_pos);
          const auto& fp = detail::item_or_throw(spec, rule.recognition_false_pos);
          out.push_back({rule.features[0],
                         double(t1.min_value + t2.min_value + t3.min_value),
                         double(t1.max_value + t2.max_value + t3.max_value)});
          out.push_back({rule.features[1], double(dr.min_value), double(dr.max_value)});
          // Smallest positive denominator is 1.
          out.push_back({rule.features[2], 0.0, 100.0 * std::max(dr.max_value, 0)});
          out.push_back({rule.features[3], double(tp.min_value - fp.max_value),
                         double(tp.max_value - fp.min_value)});
        }
      },
      spec.rule);
  return out;
}

// Recall composites from the seven raw HVLT scores in canonical order
// (trial1, trial2, trial3, delayed recall, recognition hits, recognition
// false positives, unused). Returns {total recall, delayed recall,
// retention %, discrimination index}.
inline std::array<double, 4> hvlt_composites(const std::array<int, 7>& scores) {
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] < 0 || scores[i] > 12) {
      throw ValidationError("HVLT score #" + std::to_string(i + 1) + " = " +
                            std::to_string(scores[i]) + " outside [0, 12]");
    }
  }
  const int total = scores[0] + scores[1] + scores[2];
  const int best_late_trial = std::max(scores[1], scores[2]);
  const double retention =
      best_late_trial == 0 ? 0.0 : 100.0 * scores[3] / best_late_trial;
  return {double(total), double(scores[3]), retention,
          double(scores[4] - scores[5])};
}

inline FeatureValues score_instrument(const InstrumentSpec& spec,
                                      const ResponseRecord& record) {
  if (record.instrument != spec.name) {
    throw ValidationError("record for instrument '" + record.instrument +
                          "' scored with spec '" + spec.name + "'");
  }
  validate(spec);
  for (const auto& [id, v] : record.values) {
    const ItemSpec* it = spec.find_item(id);
    if (!it) {
      throw ValidationError(spec.name + ": record for participant '" +
                            record.participant_id + "' has unknown item '" + id + "'");
    }
    if (v && (*v < it->min_value || *v > it->max_value)) {
      throw ValidationError(spec.name + ": value " + std::to_string(*v) +
                            " for item '" + id + "' outside [" +
                            std::to_string(it->min_value) + ", " +
                            std::to_string(it->max_value) + "]");
    }
  }

  auto raw = [&](const std::string& id) -> std::optional<int> {
    auto f = record.values.find(id);
    if (f == record.values.end()) return std::nullopt;
    return f->second;
  };
  // Reversal-adjusted item value.
  auto item = [&](const ItemSpec& it) -> std::optional<double> {
    auto v = raw(it.item_id);
    if (!v) return std::nullopt;
    return double(it.reverse ? reverse_item(*v, it) : *v);
  };
  auto sum = [&](const auto& ids_or_items) -> std::optional<double> {
    double s = 0;
    for (const auto& x : ids_or_items) {
      std::optional<double> v;
      if constexpr (std::is_same_v<std::decay_t<decltype(x)>, ItemSpec>) {
        v = item(x);
      } else {
        v = item(detail::item_or_throw(spec, x));
      }
      if (!v) return std::nullopt;
      s += *v;
    }
    return s;
  };

  FeatureValues out;
  std::visit(
      [&](const auto& rule) {
        using R = std::decay_t<decltype(rule)>;
        if constexpr (std::is_same_v<R, SumAll>) {
          out.push_back({rule.feature, sum(spec.items)});
        } else if constexpr (std::is_same_v<R, PassThrough> ||
                             std::is_same_v<R, SingleScore>) {
          for (const auto& it : spec.items) out.push_back({it.item_id, item(it)});
        } else if constexpr (std::is_same_v<R, DropThenPassThrough>) {
          for (const auto& it : spec.items) {
            if (std::find(rule.dropped.begin(), rule.dropped.end(), it.item_id) ==
                rule.dropped.end()) {
              out.push_back({it.item_id, item(it)});
            }
          }
        } else if constexpr (std::is_same_v<R, SumGroups>) {
          for (const auto& g : rule.groups) out.push_back({g.feature, sum(g.items)});
        } else if constexpr (std::is_same_v<R, HvltComposites>) {
          std::array<int, 7> scores{};
          bool complete = true;
          const auto ids = rule.ordered();
          for (std::size_t i = 0; i < 6; ++i) {
            auto v = raw(*ids[i]);
            if (!v) {
              complete = false;
              break;
            }
            scores[i] = *v;
          }
          if (complete) {
            const auto f = hvlt_composites(scores);
            for (std::size_t i = 0; i < 4; ++i) out.push_back({rule.features[i], f[i]});
          } else {
            for (const auto& name : rule.features) out.push_back({name, std::nullopt});
          }
        }
      },
      spec.rule);
  return out;
}

// Reflects every feature within its theoretical range when the instrument
// is flagged for flipping, so that higher always means worse.
inline FeatureValues align_direction(FeatureValues features, const InstrumentSpec& spec) {
  if (!spec.flip_for_alignment) return features;
  const auto ranges = feature_ranges(spec);
  for (auto& f : features) {
    auto r = std::find_if(ranges.begin(), ranges.end(),
                          [&](const FeatureRange& x) { return x.name == f.name; });
    if (r == ranges.end()) {
      throw ConfigError(spec.name + ": no range for feature '" + f.name + "'");
    }
    if (f.value) f.value = r->min + r->max - *f.value;
  }
  return features;
}

// ---------------------------------------------------------------------------
// Instrument config (JSON).

inline ScoringRule parse_rule(const nlohmann::json& j, const std::string& where) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "sum_all") return SumAll{j.at("feature").get<std::string>()};
  if (type == "pass_through") return PassThrough{};
  if (type == "single_score") return SingleScore{};
  if (type == "drop_then_pass_through") {
    return DropThenPassThrough{j.at("dropped").get<std::vector<std::string>>()};
  }
  if (type == "sum_groups") {
    SumGroups r;
    for (const auto& g : j.at("groups")) {
      r.groups.push_back({g.at("feature").get<std::string>(),
                          g.at("items").get<std::vector<std::string>>()});
    }
    return r;
  }
  if (type == "hvlt_composites") {
    HvltComposites r;
    const auto& m = j.at("mapping");
    r.trial1 = m.at("trial1");
    r.trial2 = m.at("trial2");
    r.trial3 = m.at("trial3");
    r.delayed_recall = m.at("delayed_recall");
    r.recognition_true_pos = m.at("recognition_true_pos");
    r.recognition_false_pos = m.at("recognition_false_pos");
    r.unused = m.at("unused");
    if (j.contains("features")) {
      r.features = j.at("features").get<std::array<std::string, 4>>();
    }
    return r;
  }
  throw ConfigError(where + ": unknown scoring rule '" + type + "'");
}

inline InstrumentSpec parse_instrument(const nlohmann::json& j) {
  InstrumentSpec s;
  try {
    s.name = j.at("name").get<std::string>();
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "subjective") {
      s.kind = InstrumentKind::Subjective;
    } else if (kind == "objective") {
      s.kind = InstrumentKind::Objective;
    } else {
      throw ConfigError(s.name + ": kind must be 'subjective' or 'objective'");
    }
    s.flip_for_alignment = j.value("flip_for_alignment", false);
    for (const auto& it : j.at("items")) {
      s.items.push_back({it.at("id").get<std::string>(), it.at("min").get<int>(),
                         it.at("max").get<int>(), it.value("reverse", false)});
    }
    s.rule = parse_rule(j.at("rule"), s.name);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("instrument '" + s.name + "': " + e.what());
  }
  validate(s);
  return s;
}

using Battery = std::vector<InstrumentSpec>;

inline Battery load_battery(const nlohmann::json& doc) {
  Battery b;
  std::set<std::string> names;
  for (const auto& j : doc.at("instruments")) {
    b.push_back(parse_instrument(j));
    if (!names.insert(b.back().name).second) {
      throw ConfigError("duplicate instrument '" + b.back().name + "'");
    }
  }
  return b;
}

inline Battery load_battery_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open instrument config '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("instrument config '" + path + "': " + e.what());
  }
  return load_battery(doc);
}

// Instruments of the requested kind, in config order.
inline Battery select(const Battery& battery, std::optional<InstrumentKind> kind) {
  Battery out;
  for (const auto& s : battery) {
    if (!kind || s.kind == *kind) out.push_back(s);
  }
  return out;
}

inline std::size_t feature_count(const Battery& battery) {
  std::size_t n = 0;
  for (const auto& s : battery) n += feature_ranges(s).size();
  return n;
}

}  // namespace scopepd::survey
