#pragma once

// Model selection and reporting: grid search under stratified k-fold CV
// (F1 objective), held-out evaluation, per-fold reports with mean +/- sample
// std aggregation and out-of-fold confusion matrices. Every fit normalizes
// features with min-max parameters learned on that fit's training rows only.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "scopepd/classifier.hpp"
#include "scopepd/csv.hpp"
#include "scopepd/dataset.hpp"
#include "scopepd/metrics.hpp"
#include "scopepd/parallel.hpp"

namespace scopepd {

// ---------------------------------------------------------------------------
// Grids.

struct GridSpec {
  ModelFamily family = ModelFamily::RF;
  Hyperparams base;
  // Axes in declared order; the last axis varies fastest.
  std::vector<std::pair<std::string, std::vector<nlohmann::json>>> axes;

  std::vector<Hyperparams> expand() const {
    std::vector<Hyperparams> cells{base};
    for (const auto& [key, values] : axes) {
      if (values.empty()) throw ConfigError("grid axis '" + key + "' has no values");
      std::vector<Hyperparams> next;
      for (const auto& cell : cells) {
        for (const auto& v : values) {
          Hyperparams p = cell;
          apply_json(p, key, v);
          next.push_back(p);
        }
      }
      cells = std::move(next);
    }
    return cells;
  }
};

// {"rf": {"n_trees": [100, 300], ...}, "gbm": {...}}; a key mapping to a
// scalar fixes that hyperparameter for every cell. Key order inside a
// family is preserved.
inline std::map<ModelFamily, GridSpec> load_grids(const nlohmann::ordered_json& doc,
                                                  const Hyperparams& base = {}) {
  std::map<ModelFamily, GridSpec> out;
  for (const auto& [name, body] : doc.items()) {
    GridSpec g;
    g.family = parse_family(name);
    g.base = base;
    for (const auto& [key, v] : body.items()) {
      if (v.is_array()) {
        std::vector<nlohmann::json> values;
        for (const auto& x : v) values.push_back(nlohmann::json::parse(x.dump()));
        g.axes.emplace_back(key, std::move(values));
      } else {
        apply_json(g.base, key, nlohmann::json::parse(v.dump()));
      }
    }
    g.expand();  // validates keys
    out[g.family] = std::move(g);
  }
  return out;
}

inline std::map<ModelFamily, GridSpec> load_grids_file(const std::string& path,
                                                       const Hyperparams& base = {}) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open grid config '" + path + "'");
  nlohmann::ordered_json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("grid config '" + path + "': " + e.what());
  }
  return load_grids(doc, base);
}

// ---------------------------------------------------------------------------
// Single fits.

struct FittedPipeline {
  NormalizationParams norm;
  FittedModel model;

  double predict_proba(std::span<const double> raw_row) const {
    const auto x = apply_minmax_row(norm, raw_row);
    return scopepd::predict_proba(model, x);
  }
};

inline FittedPipeline fit_pipeline(ModelFamily family, const Hyperparams& params,
                                   const FeatureMatrix& train) {
  FittedPipeline p;
  p.norm = fit_minmax(train);
  const auto x = apply_minmax(p.norm, train);
  p.model = fit_model(family, params, x.values, train.binary_targets(), train.feature_names);
  return p;
}

inline std::vector<double> predict_matrix(const FittedPipeline& p, const FeatureMatrix& m) {
  const auto x = apply_minmax(p.norm, m);
  return predict_proba(p.model, x.values);
}

// Fits on `train_idx` rows and scores `valid_idx` rows.
inline std::vector<double> fit_and_score(ModelFamily family, const Hyperparams& params,
                                         const FeatureMatrix& m,
                                         const std::vector<std::size_t>& train_idx,
                                         const std::vector<std::size_t>& valid_idx) {
  const auto pipe = fit_pipeline(family, params, m.select_rows(train_idx));
  return predict_matrix(pipe, m.select_rows(valid_idx));
}

// ---------------------------------------------------------------------------
// Grid search.

struct CellResult {
  Hyperparams params;
  std::vector<double> fold_f1;
  double mean_f1 = std::numeric_limits<double>::quiet_NaN();
  std::string error;  // non-empty when the cell failed
};

struct GridSearchResult {
  std::vector<CellResult> cells;
  std::size_t best_index = 0;
  Hyperparams best;
};

inline GridSearchResult grid_search_cv(ModelFamily family, const GridSpec& grid,
                                       const FeatureMatrix& train, const SplitPlan& plan,
                                       unsigned n_threads = 1) {
  const auto cells = grid.expand();
  if (cells.empty()) throw ConfigError("grid is empty");
  const auto folds = stratified_kfold(train, plan);
  const auto y = train.binary_targets();

  GridSearchResult result;
  result.cells.resize(cells.size());
  parallel_for(cells.size(), n_threads, [&](std::size_t c) {
    auto& cell = result.cells[c];
    cell.params = cells[c];
    try {
      double sum = 0;
      for (const auto& fold : folds) {
        const auto scores = fit_and_score(family, cells[c], train, fold.train, fold.valid);
        std::vector<int> yv;
        for (std::size_t i : fold.valid) yv.push_back(y[i]);
        const double f1 = metrics_from_confusion(confusion_counts(yv, scores)).f1;
        cell.fold_f1.push_back(f1);
        sum += f1;
      }
      cell.mean_f1 = sum / static_cast<double>(folds.size());
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  });

  bool found = false;
  std::string failures;
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    const auto& cell = result.cells[c];
    if (!cell.error.empty()) {
      failures += "\n  cell " + std::to_string(c) + ": " + cell.error;
      continue;
    }
    if (!found || cell.mean_f1 > result.cells[result.best_index].mean_f1) {
      result.best_index = c;
      found = true;
    }
  }
  if (!found) throw Error("every grid cell failed:" + failures);
  result.best = result.cells[result.best_index].params;
  return result;
}

// ---------------------------------------------------------------------------
// Held-out evaluation and cross-validated reports.

struct HeldoutResult {
  MetricSet metrics;
  ConfusionCounts confusion;
  FittedPipeline pipeline;
};

inline HeldoutResult evaluate_heldout(ModelFamily family, const Hyperparams& best,
                                      const FeatureMatrix& train, const FeatureMatrix& test) {
  HeldoutResult r;
  r.pipeline = fit_pipeline(family, best, train);
  const auto scores = predict_matrix(r.pipeline, test);
  const auto y = test.binary_targets();
  r.metrics = compute_metrics(y, scores);
  r.confusion = confusion_counts(y, scores);
  return r;
}

struct FoldReport {
  int fold_index = 0;
  MetricSet metrics;
  ConfusionCounts confusion;
};

struct CrossValidation {
  std::vector<FoldReport> folds;
  std::vector<double> oof_scores;  // one per sample, from the fold that held it out
  std::vector<int> fold_of;        // fold index that predicted each sample
};

inline CrossValidation cross_validate(ModelFamily family, const Hyperparams& params,
                                      const FeatureMatrix& m, const SplitPlan& plan,
                                      unsigned n_threads = 1) {
  const auto folds = stratified_kfold(m, plan);
  const auto y = m.binary_targets();
  CrossValidation cv;
  cv.folds.resize(folds.size());
  cv.oof_scores.assign(m.rows(), std::numeric_limits<double>::quiet_NaN());
  cv.fold_of.assign(m.rows(), -1);
  std::vector<std::vector<double>> fold_scores(folds.size());
  parallel_for(folds.size(), n_threads, [&](std::size_t f) {
    fold_scores[f] = fit_and_score(family, params, m, folds[f].train, folds[f].valid);
  });
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<int> yv;
    for (std::size_t k = 0; k < folds[f].valid.size(); ++k) {
      const std::size_t i = folds[f].valid[k];
      if (cv.fold_of[i] != -1) throw Error("sample predicted by more than one fold");
      cv.oof_scores[i] = fold_scores[f][k];
      cv.fold_of[i] = static_cast<int>(f);
      yv.push_back(y[i]);
    }
    cv.folds[f] = {static_cast<int>(f), compute_metrics(yv, fold_scores[f]),
                   confusion_counts(yv, fold_scores[f])};
  }
  return cv;
}

// Row-normalized confusion matrix of out-of-fold predictions.
inline NormalizedConfusion oof_confusion(const CrossValidation& cv, const FeatureMatrix& m) {
  return normalize_rows(confusion_counts(m.binary_targets(), cv.oof_scores));
}

inline NormalizedConfusion oof_confusion(ModelFamily family, const Hyperparams& params,
                                         const FeatureMatrix& m, const SplitPlan& plan,
                                         unsigned n_threads = 1) {
  return oof_confusion(cross_validate(family, params, m, plan, n_threads), m);
}

// ---------------------------------------------------------------------------
// Aggregation and formatting.

struct MeanStd {
  double mean = 0;
  double std = 0;
};

struct AggregateMetrics {
  MeanStd accuracy, precision, recall, f1, roc_auc, pr_auc;
};

// Arithmetic mean and sample (n - 1) standard deviation.
inline MeanStd mean_std(const std::vector<double>& v) {
  if (v.size() < 2) throw ValidationError("mean +/- std needs at least two values");
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

inline AggregateMetrics aggregate_folds(const std::vector<FoldReport>& reports) {
  if (reports.size() < 2) throw ValidationError("aggregation needs at least two fold reports");
  auto collect = [&](double MetricSet::*field) {
    std::vector<double> v;
    for (const auto& r : reports) v.push_back(r.metrics.*field);
    return mean_std(v);
  };
  return {collect(&MetricSet::accuracy), collect(&MetricSet::precision),
          collect(&MetricSet::recall),   collect(&MetricSet::f1),
          collect(&MetricSet::roc_auc),  collect(&MetricSet::pr_auc)};
}

// "0.9866 ± 0.0091"
inline std::string format_mean_std(const MeanStd& m) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f \xC2\xB1 %.4f", m.mean, m.std);
  return buf;
}

// ---------------------------------------------------------------------------
// Report rows.

struct ReportRow {
  std::string dataset;
  ModelFamily family;
  std::string scope;  // "cv_fold" | "cv_mean" | "cv_std" | "heldout"
  int fold = -1;
  MetricSet metrics;
};

inline csv::Row metrics_header() {
  return {"dataset", "model", "scope", "fold", "accuracy", "precision",
          "recall",  "f1",    "roc_auc", "pr_auc"};
}

inline csv::Row to_csv_row(const ReportRow& r) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  return {r.dataset, std::string(to_string(r.family)), r.scope,
          r.fold >= 0 ? std::to_string(r.fold) : "",
          num(r.metrics.accuracy), num(r.metrics.precision), num(r.metrics.recall),
          num(r.metrics.f1), num(r.metrics.roc_auc), num(r.metrics.pr_auc)};
}

inline std::vector<ReportRow> report_rows(const std::string& dataset, ModelFamily family,
                                          const CrossValidation& cv, const MetricSet& heldout) {
  std::vector<ReportRow> rows;
  for (const auto& f : cv.folds) rows.push_back({dataset, family, "cv_fold", f.fold_index, f.metrics});
  const auto agg = aggregate_folds(cv.folds);
  rows.push_back({dataset, family, "cv_mean", -1,
                  {agg.accuracy.mean, agg.precision.mean, agg.recall.mean, agg.f1.mean,
                   agg.roc_auc.mean, agg.pr_auc.mean}});
  rows.push_back({dataset, family, "cv_std", -1,
                  {agg.accuracy.std, agg.precision.std, agg.recall.std, agg.f1.std,
                   agg.roc_auc.std, agg.pr_auc.std}});
  rows.push_back({dataset, family, "heldout", -1, heldout});
  return rows;
}

// Fixed-width text table with one line per (dataset, model): CV mean ± std
// for every metric, followed by the held-out F1.
struct TableLine {
  std::string dataset;
  ModelFamily family;
  AggregateMetrics cv;
  MetricSet heldout;
};

inline std::string render_table(const std::vector<TableLine>& lines) {
  std::ostringstream os;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-11s %-20s %-17s %-17s %-17s %-17s %-17s %-17s %-8s\n",
                "Test Type", "Model", "Accuracy ± SD", "Precision ± SD", "Recall ± SD",
                "F1 Score ± SD", "ROC AUC ± SD", "PR AUC ± SD", "Held-out F1");
  os << buf;
  os << std::string(160, '-') << '\n';
  for (const auto& l : lines) {
    std::snprintf(buf, sizeof buf, "%-11s %-20s %-17s %-17s %-17s %-17s %-17s %-17s %.4f\n",
                  l.dataset.c_str(), std::string(display_name(l.family)).c_str(),
                  format_mean_std(l.cv.accuracy).c_str(), format_mean_std(l.cv.precision).c_str(),
                  format_mean_std(l.cv.recall).c_str(), format_mean_std(l.cv.f1).c_str(),
                  format_mean_std(l.cv.roc_auc).c_str(), format_mean_std(l.cv.pr_auc).c_str(),
                  l.heldout.f1);
    os << buf;
  }
  os << "Mean ± sample SD over the CV folds of the training split; "
        "held-out F1 from one refit on the full training split.\n";
  return os.str();
}

}  // namespace scopepd
