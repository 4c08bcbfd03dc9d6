#pragma once

// Feature-matrix assembly and preparation: long-format responses to a wide
// matrix, missing-data removal, cohort filtering, min-max normalization and
// stratified splitting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "scopepd/cohort.hpp"
#include "scopepd/csv.hpp"
#include "scopepd/error.hpp"
#include "scopepd/matrix.hpp"
#include "scopepd/parallel.hpp"
#include "scopepd/survey_scoring.hpp"

namespace scopepd {

struct FeatureMatrix {
  std::vector<std::string> feature_names;
  Matrix values;
  std::vector<CohortLabel> labels;
  std::vector<std::string> participant_ids;

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }

  void validate() const {
    if (values.rows() != labels.size() || values.rows() != participant_ids.size()) {
      throw ValidationError("feature matrix row, label and id counts differ");
    }
    if (values.cols() != feature_names.size()) {
      throw ValidationError("feature matrix column count differs from feature names");
    }
    std::set<std::string> seen;
    for (const auto& n : feature_names) {
      if (!seen.insert(n).second) {
        throw ValidationError("duplicate feature name '" + n + "'");
      }
    }
  }

  FeatureMatrix select_rows(std::span<const std::size_t> idx) const {
    FeatureMatrix out;
    out.feature_names = feature_names;
    out.values = values.select_rows(idx);
    for (std::size_t i : idx) {
      out.labels.push_back(labels[i]);
      out.participant_ids.push_back(participant_ids[i]);
    }
    return out;
  }

  // PD = 1, HC = 0; throws for other cohorts.
  std::vector<int> binary_targets() const {
    std::vector<int> y;
    y.reserve(labels.size());
    for (auto c : labels) y.push_back(binary_label(c));
    return y;
  }

  bool has_missing() const {
    return std::any_of(values.data().begin(), values.data().end(),
                       [](double v) { return is_missing(v); });
  }

  std::optional<std::size_t> feature_index(const std::string& name) const {
    auto it = std::find(feature_names.begin(), feature_names.end(), name);
    if (it == feature_names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - feature_names.begin());
  }
};

// ---------------------------------------------------------------------------
// Long-format responses.

struct ResponseRow {
  std::string participant_id;
  CohortLabel cohort;
  std::string instrument;
  std::string item_id;
  std::optional<int> value;
};

inline std::optional<int> parse_response_value(const std::string& s) {
  if (s.empty() || s == "NA" || s == "NaN") return std::nullopt;
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw ValidationError("response value '" + s + "' is not an integer");
  }
  if (pos != s.size()) throw ValidationError("response value '" + s + "' is not an integer");
  return v;
}

inline std::vector<ResponseRow> read_responses(std::istream& in) {
  const auto t = csv::read(in);
  const auto c_id = t.column("participant_id"), c_cohort = t.column("cohort"),
             c_inst = t.column("instrument"), c_item = t.column("item_id"),
             c_val = t.column("value");
  std::vector<ResponseRow> rows;
  rows.reserve(t.rows.size());
  for (const auto& r : t.rows) {
    rows.push_back({r[c_id], parse_cohort(r[c_cohort]), r[c_inst], r[c_item],
                    parse_response_value(r[c_val])});
  }
  return rows;
}

inline std::vector<ResponseRow> read_responses_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open response CSV '" + path + "'");
  return read_responses(in);
}

inline void write_responses(std::ostream& out, const std::vector<ResponseRow>& rows) {
  csv::write_row(out, {"participant_id", "cohort", "instrument", "item_id", "value"});
  for (const auto& r : rows) {
    csv::write_row(out, {r.participant_id, std::string(to_string(r.cohort)), r.instrument,
                         r.item_id, r.value ? std::to_string(*r.value) : ""});
  }
}

// Groups long rows into one record per (participant, instrument), keeping
// participants in order of first appearance.
inline std::vector<survey::ResponseRecord> group_records(const std::vector<ResponseRow>& rows) {
  std::vector<survey::ResponseRecord> records;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  std::unordered_map<std::string, CohortLabel> cohort_of;
  for (const auto& r : rows) {
    auto [it, fresh] = cohort_of.emplace(r.participant_id, r.cohort);
    if (!fresh && it->second != r.cohort) {
      throw ValidationError("participant '" + r.participant_id +
                            "' appears with more than one cohort label");
    }
    auto key = std::make_pair(r.participant_id, r.instrument);
    auto f = index.find(key);
    if (f == index.end()) {
      f = index.emplace(key, records.size()).first;
      records.push_back({r.participant_id, r.cohort, r.instrument, {}});
    }
    auto& rec = records[f->second];
    if (rec.values.count(r.item_id)) {
      throw ValidationError("participant '" + r.participant_id + "' answers item '" +
                            r.item_id + "' twice");
    }
    rec.values[r.item_id] = r.value;
  }
  return records;
}

// Scores and direction-aligns every participant against the battery. A
// participant with no record for an instrument gets missing values for all
// of that instrument's features.
inline FeatureMatrix assemble_matrix(const survey::Battery& battery,
                                     const std::vector<survey::ResponseRecord>& records) {
  FeatureMatrix m;
  std::map<std::string, const survey::InstrumentSpec*> by_name;
  for (const auto& spec : battery) {
    by_name[spec.name] = &spec;
    for (const auto& f : survey::feature_ranges(spec)) m.feature_names.push_back(f.name);
  }
  std::vector<std::string> order;
  std::map<std::string, std::pair<CohortLabel, std::map<std::string, const survey::ResponseRecord*>>>
      per_participant;
  for (const auto& r : records) {
    auto [it, fresh] = per_participant.try_emplace(r.participant_id);
    if (fresh) {
      order.push_back(r.participant_id);
      it->second.first = r.cohort;
    }
    it->second.second[r.instrument] = &r;
  }
  std::vector<double> row;
  for (const auto& pid : order) {
    const auto& [cohort, insts] = per_participant.at(pid);
    row.clear();
    for (const auto& spec : battery) {
      auto f = insts.find(spec.name);
      if (f == insts.end()) {
        row.insert(row.end(), survey::feature_ranges(spec).size(), kMissing);
        continue;
      }
      auto scored = survey::align_direction(survey::score_instrument(spec, *f->second), spec);
      for (const auto& v : scored) row.push_back(v.value ? *v.value : kMissing);
    }
    m.values.append_row(row);
    m.labels.push_back(cohort);
    m.participant_ids.push_back(pid);
  }
  if (m.values.cols() == 0) m.values = Matrix(m.participant_ids.size(), m.feature_names.size());
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Wide-format CSV: participant_id, cohort, <features...>

inline void write_wide(std::ostream& out, const FeatureMatrix& m) {
  csv::Row header{"participant_id", "cohort"};
  header.insert(header.end(), m.feature_names.begin(), m.feature_names.end());
  csv::write_row(out, header);
  csv::Row row;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    row.assign({m.participant_ids[i], std::string(to_string(m.labels[i]))});
    for (double v : m.values.row(i)) row.push_back(csv::format_number(v));
    csv::write_row(out, row);
  }
}

inline void write_wide_file(const std::string& path, const FeatureMatrix& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_wide(out, m);
}

inline FeatureMatrix read_wide(std::istream& in) {
  const auto t = csv::read(in);
  if (t.header.size() < 3 || t.header[0] != "participant_id" || t.header[1] != "cohort") {
    throw ValidationError("wide CSV must start with participant_id,cohort and one feature");
  }
  FeatureMatrix m;
  m.feature_names.assign(t.header.begin() + 2, t.header.end());
  std::vector<double> row(m.feature_names.size());
  for (const auto& r : t.rows) {
    m.participant_ids.push_back(r[0]);
    m.labels.push_back(parse_cohort(r[1]));
    for (std::size_t j = 0; j < row.size(); ++j) {
      const auto& s = r[j + 2];
      if (s.empty() || s == "NA" || s == "NaN" || s == "nan") {
        row[j] = kMissing;
      } else {
        try {
          row[j] = std::stod(s);
        } catch (const std::exception&) {
          throw ValidationError("non-numeric cell '" + s + "' in column " +
                                m.feature_names[j]);
        }
      }
    }
    m.values.append_row(row);
  }
  if (m.values.cols() == 0) m.values = Matrix(0, m.feature_names.size());
  m.validate();
  return m;
}

inline FeatureMatrix read_wide_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open feature CSV '" + path + "'");
  return read_wide(in);
}

// ---------------------------------------------------------------------------
// Cleaning.

// Feature-missing threshold (a count) for a matrix of n rows, given the
// maximum tolerated missing fraction per feature.
inline std::size_t missing_threshold(std::size_t n_rows, double max_fraction) {
  return static_cast<std::size_t>(std::floor(max_fraction * static_cast<double>(n_rows)));
}

// Two stages: drop features with more than max_feature_missing missing
// cells, then drop samples that still have any missing cell.
inline FeatureMatrix drop_missing(const FeatureMatrix& m, std::size_t max_feature_missing) {
  m.validate();
  std::vector<std::size_t> keep_cols;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    std::size_t missing = 0;
    for (std::size_t i = 0; i < m.rows(); ++i) missing += is_missing(m.values(i, j));
    if (missing <= max_feature_missing) keep_cols.push_back(j);
  }
  if (keep_cols.empty()) throw EmptyResultError("drop_missing removed every feature");
  std::vector<std::size_t> keep_rows;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    bool complete = true;
    for (std::size_t j : keep_cols) {
      if (is_missing(m.values(i, j))) {
        complete = false;
        break;
      }
    }
    if (complete) keep_rows.push_back(i);
  }
  if (keep_rows.empty()) throw EmptyResultError("drop_missing removed every sample");
  FeatureMatrix out;
  for (std::size_t j : keep_cols) out.feature_names.push_back(m.feature_names[j]);
  out.values = m.values.select_rows(keep_rows).select_cols(keep_cols);
  for (std::size_t i : keep_rows) {
    out.labels.push_back(m.labels[i]);
    out.participant_ids.push_back(m.participant_ids[i]);
  }
  return out;
}

inline FeatureMatrix filter_cohorts(const FeatureMatrix& m, const std::set<CohortLabel>& keep) {
  if (keep.empty()) throw ValidationError("filter_cohorts needs at least one cohort");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (keep.count(m.labels[i])) idx.push_back(i);
  }
  if (idx.empty()) throw EmptyResultError("no samples left after cohort filtering");
  return m.select_rows(idx);
}

// Restricts the matrix to the named features, in the given order.
inline FeatureMatrix select_features(const FeatureMatrix& m,
                                     const std::vector<std::string>& names) {
  std::vector<std::size_t> cols;
  for (const auto& n : names) {
    auto j = m.feature_index(n);
    if (!j) throw ValidationError("feature '" + n + "' not present in matrix");
    cols.push_back(*j);
  }
  FeatureMatrix out = m;
  out.feature_names = names;
  out.values = m.values.select_cols(cols);
  return out;
}

// ---------------------------------------------------------------------------
// Min-max normalization.

struct NormalizationParams {
  std::vector<std::string> feature_names;
  std::vector<double> min;
  std::vector<double> max;
};

inline NormalizationParams fit_minmax(const FeatureMatrix& train) {
  NormalizationParams p;
  p.feature_names = train.feature_names;
  p.min.assign(train.cols(), std::numeric_limits<double>::infinity());
  p.max.assign(train.cols(), -std::numeric_limits<double>::infinity());
  if (train.rows() == 0) throw ValidationError("cannot fit normalization on zero rows");
  for (std::size_t i = 0; i < train.rows(); ++i) {
    for (std::size_t j = 0; j < train.cols(); ++j) {
      const double v = train.values(i, j);
      if (is_missing(v)) throw ValidationError("cannot normalize a matrix with missing cells");
      p.min[j] = std::min(p.min[j], v);
      p.max[j] = std::max(p.max[j], v);
    }
  }
  return p;
}

// x' = (x - min) / (max - min), clipped to [0, 1]; constant features map to 0.
inline double scale_value(double v, double lo, double hi) {
  if (hi == lo) return 0.0;
  return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
}

inline FeatureMatrix apply_minmax(const NormalizationParams& p, const FeatureMatrix& m) {
  if (p.feature_names != m.feature_names) {
    throw ValidationError("normalization parameters were fitted on different features");
  }
  FeatureMatrix out = m;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      out.values(i, j) = scale_value(m.values(i, j), p.min[j], p.max[j]);
    }
  }
  return out;
}

inline std::vector<double> apply_minmax_row(const NormalizationParams& p,
                                            std::span<const double> row) {
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = scale_value(row[j], p.min[j], p.max[j]);
  return out;
}

inline nlohmann::json to_json(const NormalizationParams& p) {
  nlohmann::json j;
  j["method"] = "minmax";
  j["clip"] = true;
  j["features"] = nlohmann::json::array();
  for (std::size_t i = 0; i < p.feature_names.size(); ++i) {
    j["features"].push_back({{"name", p.feature_names[i]}, {"min", p.min[i]}, {"max", p.max[i]}});
  }
  return j;
}

inline NormalizationParams normalization_from_json(const nlohmann::json& j) {
  NormalizationParams p;
  try {
    for (const auto& f : j.at("features")) {
      p.feature_names.push_back(f.at("name").get<std::string>());
      p.min.push_back(f.at("min").get<double>());
      p.max.push_back(f.at("max").get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("normalization sidecar: ") + e.what());
  }
  return p;
}

// ---------------------------------------------------------------------------
// Stratified splitting.

struct SplitPlan {
  std::uint64_t seed = 42;
  double test_fraction = 0.2;
  int k_folds = 5;
};

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
};

namespace detail {

inline std::array<std::vector<std::size_t>, 2> indices_by_class(const std::vector<int>& y) {
  std::array<std::vector<std::size_t>, 2> by;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) throw ValidationError("labels must be 0 or 1");
    by[y[i]].push_back(i);
  }
  return by;
}

inline void seeded_shuffle(std::vector<std::size_t>& v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::shuffle(v.begin(), v.end(), rng);
}

}  // namespace detail

// Per class, round(test_fraction * n_c) samples go to the test side (at
// least one sample stays on each side). Indices are returned ascending.
inline Fold stratified_split_indices(const std::vector<int>& y, const SplitPlan& plan) {
  if (!(plan.test_fraction > 0.0 && plan.test_fraction < 1.0)) {
    throw ValidationError("test_fraction must lie in (0, 1)");
  }
  auto by = detail::indices_by_class(y);
  Fold out;
  for (int c = 0; c < 2; ++c) {
    auto& idx = by[c];
    if (idx.size() < 2) {
      throw ValidationError("class " + std::to_string(c) + " has " +
                            std::to_string(idx.size()) +
                            " samples; stratified split needs at least 2");
    }
    detail::seeded_shuffle(idx, derive_seed(plan.seed, 0x5701 + c));
    auto n_test = static_cast<std::size_t>(std::llround(plan.test_fraction * idx.size()));
    n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
    out.valid.insert(out.valid.end(), idx.begin(), idx.begin() + n_test);
    out.train.insert(out.train.end(), idx.begin() + n_test, idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.valid.begin(), out.valid.end());
  return out;
}

inline std::pair<FeatureMatrix, FeatureMatrix> stratified_split(const FeatureMatrix& m,
                                                                const SplitPlan& plan) {
  const auto s = stratified_split_indices(m.binary_targets(), plan);
  return {m.select_rows(s.train), m.select_rows(s.valid)};
}

// Each class is shuffled and dealt round-robin over the folds, continuing
// the deal position across classes so fold sizes differ by at most one.
inline std::vector<Fold> stratified_kfold_indices(const std::vector<int>& y, const SplitPlan& plan) {
  if (plan.k_folds < 2) throw ValidationError("k_folds must be at least 2");
  auto by = detail::indices_by_class(y);
  const auto k = static_cast<std::size_t>(plan.k_folds);
  const std::size_t minority = std::min(by[0].size(), by[1].size());
  if (k > minority) {
    throw ValidationError("k_folds = " + std::to_string(k) +
                          " exceeds the minority class size " + std::to_string(minority));
  }
  std::vector<Fold> folds(k);
  std::size_t deal = 0;
  for (int c = 0; c < 2; ++c) {
    auto& idx = by[c];
    detail::seeded_shuffle(idx, derive_seed(plan.seed, 0xF01D + c));
    for (std::size_t i : idx) folds[deal++ % k].valid.push_back(i);
  }
  for (auto& f : folds) std::sort(f.valid.begin(), f.valid.end());
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) folds[f].train.insert(folds[f].train.end(), folds[g].valid.begin(),
                                        folds[g].valid.end());
    }
    std::sort(folds[f].train.begin(), folds[f].train.end());
  }
  return folds;
}

inline std::vector<Fold> stratified_kfold(const FeatureMatrix& m, const SplitPlan& plan) {
  return stratified_kfold_indices(m.binary_targets(), plan);
}

}  // namespace scopepd
