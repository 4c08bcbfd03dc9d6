#pragma once

// Aggregation of per-sample attributions: class-conditional mean |phi|
// rankings and per-sample waterfall terms.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "scopepd/cohort.hpp"
#include "scopepd/csv.hpp"
#include "scopepd/treeshap.hpp"

namespace scopepd {

struct GlobalContribution {
  std::string feature_name;
  double mean_abs_hc = 0.0;
  double mean_abs_pd = 0.0;

  double total() const { return mean_abs_hc + mean_abs_pd; }
};

struct GlobalSummary {
  std::vector<GlobalContribution> ranked;  // descending by total
  std::vector<std::string> warnings;
};

// Mean |phi| per feature over HC (label 0) and PD (label 1) samples, ranked
// descending by the sum; equal totals keep feature order. top_k = 0 keeps
// every feature.
inline GlobalSummary global_contributions(std::span<const Attribution> attributions,
                                          std::span<const int> labels,
                                          const std::vector<std::string>& feature_names,
                                          std::size_t top_k = 0) {
  if (attributions.size() != labels.size()) {
    throw ValidationError("attribution and label counts differ");
  }
  const std::size_t m = feature_names.size();
  std::vector<double> sum_hc(m, 0.0), sum_pd(m, 0.0);
  std::size_t n_hc = 0, n_pd = 0;
  for (std::size_t i = 0; i < attributions.size(); ++i) {
    const auto& a = attributions[i];
    if (a.phi.size() != m) throw ValidationError("attribution width differs from feature list");
    if (labels[i] != 0 && labels[i] != 1) {
      throw ValidationError("attribution labels must be HC (0) or PD (1)");
    }
    auto& acc = labels[i] ? sum_pd : sum_hc;
    (labels[i] ? n_pd : n_hc) += 1;
    for (std::size_t j = 0; j < m; ++j) acc[j] += std::abs(a.phi[j]);
  }
  GlobalSummary out;
  if (n_hc == 0) out.warnings.push_back("no HC samples; HC mean |SHAP| reported as 0");
  if (n_pd == 0) out.warnings.push_back("no PD samples; PD mean |SHAP| reported as 0");
  out.ranked.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    out.ranked[j] = {feature_names[j], n_hc ? sum_hc[j] / static_cast<double>(n_hc) : 0.0,
                     n_pd ? sum_pd[j] / static_cast<double>(n_pd) : 0.0};
  }
  std::stable_sort(out.ranked.begin(), out.ranked.end(),
                   [](const auto& a, const auto& b) { return a.total() > b.total(); });
  if (top_k > 0 && top_k < out.ranked.size()) out.ranked.resize(top_k);
  return out;
}

struct WaterfallTerm {
  std::string feature_name;
  double value = 0.0;  // feature value of the explained sample
  double phi = 0.0;
};

struct Waterfall {
  double base_value = 0.0;
  std::vector<WaterfallTerm> terms;  // descending |phi|
  double remainder = 0.0;            // summed phi of features beyond top_k
  std::size_t remainder_count = 0;
  double prediction = 0.0;
};

inline Waterfall local_waterfall(const Attribution& a, std::size_t top_k,
                                 const std::vector<std::string>& feature_names,
                                 std::span<const double> x = {}) {
  if (top_k < 1) throw ValidationError("top_k must be at least 1");
  if (feature_names.size() != a.phi.size()) {
    throw ValidationError("attribution width differs from feature list");
  }
  std::vector<std::size_t> order(a.phi.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return std::abs(a.phi[i]) > std::abs(a.phi[j]);
  });
  Waterfall w;
  w.base_value = a.base_value;
  w.prediction = a.prediction;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const std::size_t j = order[r];
    if (r < top_k) {
      w.terms.push_back({feature_names[j], j < x.size() ? x[j] : kMissing, a.phi[j]});
    } else {
      w.remainder += a.phi[j];
      ++w.remainder_count;
    }
  }
  return w;
}

// ---------------------------------------------------------------------------
// Export.

// One JSON object per line.
inline void write_attributions(std::ostream& os, std::span<const Attribution> attributions,
                               std::span<const int> labels,
                               const std::vector<std::string>& feature_names) {
  for (std::size_t i = 0; i < attributions.size(); ++i) {
    const auto& a = attributions[i];
    nlohmann::ordered_json rec;
    rec["participant_id"] = a.participant_id;
    rec["label"] = labels[i] ? "PD" : "HC";
    rec["output_space"] = a.output_space;
    rec["baseline"] = a.base_value;
    rec["prediction"] = a.prediction;
    nlohmann::ordered_json phi = nlohmann::ordered_json::object();
    for (std::size_t j = 0; j < feature_names.size(); ++j) phi[feature_names[j]] = a.phi[j];
    rec["phi"] = std::move(phi);
    os << rec.dump() << '\n';
  }
}

inline std::vector<std::pair<Attribution, int>> read_attributions(
    std::istream& is, const std::vector<std::string>& feature_names) {
  std::vector<std::pair<Attribution, int>> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto rec = nlohmann::json::parse(line);
    Attribution a;
    a.participant_id = rec.at("participant_id").get<std::string>();
    a.output_space = rec.at("output_space").get<std::string>();
    a.base_value = rec.at("baseline").get<double>();
    a.prediction = rec.at("prediction").get<double>();
    for (const auto& name : feature_names) a.phi.push_back(rec.at("phi").at(name).get<double>());
    out.emplace_back(std::move(a), rec.at("label").get<std::string>() == "PD" ? 1 : 0);
  }
  return out;
}

inline void write_global_csv(std::ostream& os, const GlobalSummary& g) {
  csv::write_row(os, {"rank", "feature", "mean_abs_shap_hc", "mean_abs_shap_pd", "total"});
  for (std::size_t r = 0; r < g.ranked.size(); ++r) {
    const auto& c = g.ranked[r];
    csv::write_row(os, {std::to_string(r + 1), c.feature_name, csv::format_number(c.mean_abs_hc),
                        csv::format_number(c.mean_abs_pd), csv::format_number(c.total())});
  }
}

inline void write_waterfall_csv(std::ostream& os, const std::string& participant_id,
                                const Waterfall& w) {
  csv::write_row(os, {"participant_id", "term", "feature_value", "phi", "cumulative"});
  double running = w.base_value;
  csv::write_row(os, {participant_id, "baseline", "", "", csv::format_number(running)});
  for (const auto& t : w.terms) {
    running += t.phi;
    csv::write_row(os, {participant_id, t.feature_name, csv::format_number(t.value),
                        csv::format_number(t.phi), csv::format_number(running)});
  }
  if (w.remainder_count > 0) {
    running += w.remainder;
    csv::write_row(os, {participant_id,
                        std::to_string(w.remainder_count) + " other features", "",
                        csv::format_number(w.remainder), csv::format_number(running)});
  }
  csv::write_row(os, {participant_id, "prediction", "", "", csv::format_number(w.prediction)});
}

}  // namespace scopepd
