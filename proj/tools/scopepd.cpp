// scopepd command-line front end.
//
//   scopepd synth      -> responses.csv
//   scopepd score      -> features_<dataset>.csv
//   scopepd train-eval -> metrics, table, confusion matrices, model artifacts
//   scopepd explain    -> attributions, global contributions, waterfalls
//   scopepd report     -> report.txt from every metrics_<dataset>.csv present

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "scopepd/scopepd.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scopepd;

#ifndef SCOPEPD_DEFAULT_CONFIG_DIR
#define SCOPEPD_DEFAULT_CONFIG_DIR "config"
#endif

namespace {

struct RunConfig {
  fs::path instruments;
  fs::path grids;
  std::optional<fs::path> responses;  // default: <out>/responses.csv
  fs::path out_dir = "out";
  std::string dataset = "combined";
  std::set<CohortLabel> cohorts{CohortLabel::PD, CohortLabel::HC};
  double max_missing_fraction = 0.1;
  SplitPlan split;
  std::vector<ModelFamily> models{ModelFamily::LR, ModelFamily::KNN, ModelFamily::RF,
                                  ModelFamily::GBM};
  unsigned threads = 0;
  ModelFamily explain_model = ModelFamily::RF;
  std::size_t top_k = 10;
  std::string explain_scope = "cohort";
  std::size_t waterfall_samples = 1;
  json synth = json::object();

  fs::path responses_path() const { return responses ? *responses : out_dir / "responses.csv"; }
  fs::path features_path() const { return out_dir / ("features_" + dataset + ".csv"); }
  fs::path model_path(ModelFamily f) const {
    return out_dir / "models" / (dataset + "_" + std::string(to_string(f)) + ".json");
  }
  unsigned thread_count() const {
    return threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  }
};

std::vector<ModelFamily> parse_models(const std::string& s) {
  if (s == "all") return {ModelFamily::LR, ModelFamily::KNN, ModelFamily::RF, ModelFamily::GBM};
  return {parse_family(s)};
}

void check_dataset(const std::string& d) {
  if (d != "subjective" && d != "objective" && d != "combined") {
    throw ConfigError("dataset must be subjective, objective or combined (got '" + d + "')");
  }
}

// instruments and grids paths inside the config file are relative to the
// file's directory; responses and out_dir are relative to the working
// directory.
RunConfig load_config(const std::optional<fs::path>& path) {
  RunConfig c;
  const fs::path default_dir = SCOPEPD_DEFAULT_CONFIG_DIR;
  c.instruments = default_dir / "instruments.json";
  c.grids = default_dir / "grids.json";
  if (!path) return c;
  std::ifstream in(*path);
  if (!in) throw MissingArtifactError("cannot open run config '" + path->string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("run config '" + path->string() + "': " + e.what());
  }
  const fs::path base = path->parent_path();
  auto rel = [&](const std::string& p) {
    return fs::path(p).is_absolute() ? fs::path(p) : base / p;
  };
  try {
    if (j.contains("instruments")) c.instruments = rel(j["instruments"]);
    if (j.contains("grids")) c.grids = rel(j["grids"]);
    if (j.contains("responses") && !j["responses"].is_null()) c.responses = j["responses"].get<std::string>();
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
    c.dataset = j.value("dataset", c.dataset);
    if (j.contains("cohorts")) {
      c.cohorts.clear();
      for (const auto& s : j["cohorts"]) c.cohorts.insert(parse_cohort(s.get<std::string>()));
    }
    c.max_missing_fraction = j.value("max_missing_fraction", c.max_missing_fraction);
    c.split.seed = j.value("seed", c.split.seed);
    if (j.contains("split")) {
      c.split.test_fraction = j["split"].value("test_fraction", c.split.test_fraction);
      c.split.k_folds = j["split"].value("k_folds", c.split.k_folds);
    }
    if (j.contains("models")) {
      c.models.clear();
      for (const auto& s : j["models"]) c.models.push_back(parse_family(s.get<std::string>()));
    }
    c.threads = j.value("threads", c.threads);
    if (j.contains("explain")) {
      const auto& e = j["explain"];
      if (e.contains("model")) c.explain_model = parse_family(e["model"].get<std::string>());
      c.top_k = e.value("top_k", c.top_k);
      c.explain_scope = e.value("scope", c.explain_scope);
      c.waterfall_samples = e.value("waterfall_samples", c.waterfall_samples);
    }
    if (j.contains("synth")) c.synth = j["synth"];
  } catch (const json::exception& e) {
    throw ConfigError("run config '" + path->string() + "': " + e.what());
  }
  return c;
}

void validate_config(const RunConfig& c) {
  check_dataset(c.dataset);
  if (c.explain_scope != "cohort" && c.explain_scope != "test") {
    throw ConfigError("explain scope must be 'cohort' or 'test'");
  }
  if (c.top_k < 1) throw ConfigError("top_k must be at least 1");
  if (!(c.max_missing_fraction >= 0 && c.max_missing_fraction <= 1)) {
    throw ConfigError("max_missing_fraction must lie in [0, 1]");
  }
  if (!fs::exists(c.instruments)) {
    throw MissingArtifactError("instrument config '" + c.instruments.string() + "' not found");
  }
}


void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error("cannot create directory '" + p.string() + "': " + ec.message());
}

std::ofstream open_out(const fs::path& p) {
  ensure_dir(p.parent_path().empty() ? fs::path(".") : p.parent_path());
  std::ofstream out(p);
  if (!out) throw Error("cannot open '" + p.string() + "' for writing");
  return out;
}

void write_text(const fs::path& p, const std::string& s) { open_out(p) << s; }

survey::Battery battery_for(const RunConfig& c) {
  const auto all = survey::load_battery_file(c.instruments.string());
  if (c.dataset == "subjective") return survey::select(all, survey::InstrumentKind::Subjective);
  if (c.dataset == "objective") return survey::select(all, survey::InstrumentKind::Objective);
  return all;
}

FeatureMatrix load_features(const RunConfig& c) {
  const auto path = c.features_path();
  if (!fs::exists(path)) {
    throw MissingArtifactError("feature matrix missing: '" + path.string() +
                               "'; run `scopepd score` first");
  }
  auto m = read_wide_file(path.string());
  if (m.has_missing()) throw ValidationError("feature matrix '" + path.string() + "' has missing cells");
  return m;
}

// ---------------------------------------------------------------------------

int cmd_synth(const RunConfig& c) {
  auto plan = synth::plan_from_json(c.synth);
  plan.seed = c.split.seed;
  const auto battery = survey::load_battery_file(c.instruments.string());
  const auto rows = synth::generate_cohort(plan, battery);
  auto out = open_out(c.responses_path());
  write_responses(out, rows);
  write_text(c.out_dir / "synth_plan.json", synth::to_json(plan).dump(2) + "\n");
  std::cout << "wrote " << rows.size() << " responses for " << plan.n_pd + plan.n_hc +
                   plan.n_prodromal + plan.n_swedd
            << " participants to " << c.responses_path().string() << '\n';
  return 0;
}

int cmd_score(const RunConfig& c) {
  const auto battery = battery_for(c);
  const auto rows = read_responses_file(c.responses_path().string());
  auto raw = filter_cohorts(assemble_matrix(battery, group_records(rows)), c.cohorts);
  const std::size_t threshold = missing_threshold(raw.rows(), c.max_missing_fraction);
  const auto clean = drop_missing(raw, threshold);

  json summary;
  summary["dataset"] = c.dataset;
  summary["features_scored"] = raw.cols();
  summary["samples_scored"] = raw.rows();
  summary["max_feature_missing"] = threshold;
  json dropped = json::array();
  for (const auto& n : raw.feature_names) {
    if (!clean.feature_index(n)) dropped.push_back(n);
  }
  summary["dropped_features"] = dropped;
  summary["features_kept"] = clean.cols();
  summary["samples_kept"] = clean.rows();
  write_wide_file(c.features_path().string(), clean);
  write_text(c.out_dir / ("score_summary_" + c.dataset + ".json"), summary.dump(2) + "\n");
  std::cout << c.dataset << ": " << clean.rows() << " samples x " << clean.cols()
            << " features -> " << c.features_path().string() << '\n';
  return 0;
}

json model_artifact(const RunConfig& c, ModelFamily f, const Hyperparams& p,
                    const FittedPipeline& pipe, const std::vector<std::string>& names) {
  json j;
  j["format"] = "scopepd-model";
  j["version"] = 1;
  j["dataset"] = c.dataset;
  j["family"] = std::string(to_string(f));
  j["hyperparams"] = to_json(p, f);
  j["feature_names"] = names;
  j["normalization"] = to_json(pipe.norm);
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, TreeEnsemble>) {
          j["model"] = to_json(m);
        } else if constexpr (std::is_same_v<M, LogRegModel>) {
          j["model"] = {{"weights", m.weights}, {"bias", m.bias}, {"iterations", m.iterations}};
        } else {
          j["model"] = {{"k", m.k}, {"n_train", m.x.rows()}};
        }
      },
      pipe.model);
  return j;
}

MetricSet metric_set(const csv::Table& t, const csv::Row& r) {
  auto get = [&](const char* name) { return std::stod(r[t.column(name)]); };
  return {get("accuracy"), get("precision"), get("recall"), get("f1"), get("roc_auc"),
          get("pr_auc")};
}

// One table line per model, in file order, from a metrics CSV.
std::vector<TableLine> table_lines(const csv::Table& t, const std::string& dataset) {
  std::map<std::string, TableLine> by_model;
  std::vector<std::string> order;
  for (const auto& r : t.rows) {
    const std::string model = r[t.column("model")];
    const std::string scope = r[t.column("scope")];
    auto [it, fresh] = by_model.try_emplace(model);
    if (fresh) {
      order.push_back(model);
      it->second.dataset = dataset;
      it->second.family = parse_family(model);
    }
    const auto ms = metric_set(t, r);
    auto& cv = it->second.cv;
    if (scope == "cv_mean" || scope == "cv_std") {
      double MeanStd::*field = scope == "cv_mean" ? &MeanStd::mean : &MeanStd::std;
      cv.accuracy.*field = ms.accuracy;
      cv.precision.*field = ms.precision;
      cv.recall.*field = ms.recall;
      cv.f1.*field = ms.f1;
      cv.roc_auc.*field = ms.roc_auc;
      cv.pr_auc.*field = ms.pr_auc;
    } else if (scope == "heldout") {
      it->second.heldout = ms;
    }
  }
  std::vector<TableLine> lines;
  for (const auto& model : order) lines.push_back(by_model.at(model));
  return lines;
}

int cmd_report(const RunConfig& c) {
  std::vector<TableLine> lines;
  for (const std::string ds : {"subjective", "objective", "combined"}) {
    const auto path = c.out_dir / ("metrics_" + ds + ".csv");
    if (!fs::exists(path)) continue;
    const auto more = table_lines(csv::read_file(path.string()), ds);
    lines.insert(lines.end(), more.begin(), more.end());
  }
  if (lines.empty()) {
    throw MissingArtifactError("no metrics files in '" + c.out_dir.string() +
                               "'; run `scopepd train-eval` first");
  }
  const auto table = render_table(lines);
  write_text(c.out_dir / "report.txt", table);
  std::cout << table;
  return 0;
}

int cmd_train_eval(const RunConfig& c) {
  const auto m = filter_cohorts(load_features(c), {CohortLabel::PD, CohortLabel::HC});
  const auto [train, test] = stratified_split(m, c.split);
  Hyperparams base;
  base.seed = c.split.seed;
  const auto grids = load_grids_file(c.grids.string(), base);
  const unsigned threads = c.thread_count();

  std::vector<ReportRow> rows;
  for (const auto family : c.models) {
    const auto it = grids.find(family);
    if (it == grids.end()) {
      throw ConfigError("no grid for model '" + std::string(to_string(family)) + "' in " +
                        c.grids.string());
    }
    const std::string tag = c.dataset + "_" + std::string(to_string(family));
    const auto gs = grid_search_cv(family, it->second, train, c.split, threads);
    const auto cv = cross_validate(family, gs.best, train, c.split, threads);
    const auto held = evaluate_heldout(family, gs.best, train, test);

    const auto r = report_rows(c.dataset, family, cv, held.metrics);
    rows.insert(rows.end(), r.begin(), r.end());

    {
      auto out = open_out(c.out_dir / ("grid_" + tag + ".csv"));
      csv::write_row(out, {"cell", "params", "fold_f1", "mean_f1", "error", "selected"});
      for (std::size_t i = 0; i < gs.cells.size(); ++i) {
        const auto& cell = gs.cells[i];
        std::string folds;
        for (double f : cell.fold_f1) folds += (folds.empty() ? "" : ";") + csv::format_number(f);
        csv::write_row(out, {std::to_string(i), to_json(cell.params, family).dump(), folds,
                             csv::format_number(cell.mean_f1), cell.error,
                             i == gs.best_index ? "1" : "0"});
      }
    }
    const auto conf = oof_confusion(cv, train);
    {
      auto out = open_out(c.out_dir / ("confusion_" + tag + ".csv"));
      csv::write_row(out, {"true_label", "pred_HC", "pred_PD", "count_HC", "count_PD"});
      const auto counts = confusion_counts(train.binary_targets(), cv.oof_scores);
      const char* names[2] = {"HC", "PD"};
      for (int t = 0; t < 2; ++t) {
        csv::write_row(out, {names[t], csv::format_number(conf[t][0]),
                             csv::format_number(conf[t][1]), std::to_string(counts.n[t][0]),
                             std::to_string(counts.n[t][1])});
      }
    }
    write_text(c.out_dir / ("confusion_" + tag + ".svg"),
               svg::confusion_heatmap(conf, std::string(display_name(family)) + " (" +
                                                c.dataset + ", out-of-fold)"));
    write_text(c.model_path(family),
               model_artifact(c, family, gs.best, held.pipeline, train.feature_names).dump() +
                   "\n");
    std::cout << c.dataset << " " << display_name(family) << ": CV F1 "
              << format_mean_std(aggregate_folds(cv.folds).f1) << ", held-out F1 "
              << csv::format_number(held.metrics.f1) << '\n';
  }

  // Rows of models not trained in this run are carried over.
  const auto metrics_path = c.out_dir / ("metrics_" + c.dataset + ".csv");
  csv::Table metrics{metrics_header(), {}};
  if (fs::exists(metrics_path)) {
    const auto old = csv::read_file(metrics_path.string());
    if (old.header == metrics.header) {
      for (const auto& r : old.rows) {
        const auto f = parse_family(r[old.column("model")]);
        if (std::find(c.models.begin(), c.models.end(), f) == c.models.end()) {
          metrics.rows.push_back(r);
        }
      }
    }
  }
  for (const auto& r : rows) metrics.rows.push_back(to_csv_row(r));
  // Model order is fixed (lr, knn, rf, gbm) so reruns of one model give the
  // same file.
  const auto model_col = metrics.column("model");
  std::stable_sort(metrics.rows.begin(), metrics.rows.end(), [&](const auto& a, const auto& b) {
    return parse_family(a[model_col]) < parse_family(b[model_col]);
  });
  csv::write_file(metrics_path.string(), metrics);
  write_text(c.out_dir / ("table_" + c.dataset + ".txt"),
             render_table(table_lines(metrics, c.dataset)));
  json split;
  split["seed"] = c.split.seed;
  split["train"] = train.participant_ids;
  split["test"] = test.participant_ids;
  write_text(c.out_dir / ("split_" + c.dataset + ".json"), split.dump() + "\n");
  return 0;
}

int cmd_explain(const RunConfig& c) {
  const auto path = c.model_path(c.explain_model);
  if (!fs::exists(path)) {
    throw MissingArtifactError("model artifact missing: '" + path.string() +
                               "'; run `scopepd train-eval` first");
  }
  if (c.explain_model != ModelFamily::RF && c.explain_model != ModelFamily::GBM) {
    throw ConfigError("only tree models (rf, gbm) can be explained");
  }
  json art;
  {
    std::ifstream in(path);
    try {
      in >> art;
    } catch (const json::exception& e) {
      throw ModelIntegrityError("cannot parse '" + path.string() + "': " + e.what());
    }
  }
  const auto ensemble = ensemble_from_json(art.at("model"));
  const auto norm = normalization_from_json(art.at("normalization"));

  auto m = filter_cohorts(load_features(c), {CohortLabel::PD, CohortLabel::HC});
  if (m.feature_names != ensemble.feature_names) {
    throw ValidationError("feature matrix columns differ from the model's features; rerun train-eval");
  }
  if (c.explain_scope == "test") {
    const auto split_path = c.out_dir / ("split_" + c.dataset + ".json");
    std::ifstream in(split_path);
    if (!in) throw MissingArtifactError("split record missing: '" + split_path.string() + "'");
    json split;
    in >> split;
    std::set<std::string> ids;
    for (const auto& s : split.at("test")) ids.insert(s.get<std::string>());
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (ids.count(m.participant_ids[i])) keep.push_back(i);
    }
    m = m.select_rows(keep);
  }
  const auto x = apply_minmax(norm, m);
  const auto y = m.binary_targets();

  std::vector<Attribution> attributions(m.rows());
  parallel_for(m.rows(), c.thread_count(), [&](std::size_t i) {
    attributions[i] = treeshap(ensemble, x.values.row(i), m.participant_ids[i]);
  });
  for (const auto& a : attributions) {
    double s = a.base_value;
    for (double p : a.phi) s += p;
    if (std::abs(s - a.prediction) > 1e-9) {
      throw NumericError("local accuracy violated for '" + a.participant_id + "'");
    }
  }

  const std::string tag = c.dataset + "_" + std::string(to_string(c.explain_model));
  {
    auto out = open_out(c.out_dir / ("attributions_" + tag + ".jsonl"));
    write_attributions(out, attributions, y, m.feature_names);
  }
  const auto full = global_contributions(attributions, y, m.feature_names);
  for (const auto& w : full.warnings) std::cerr << "warning: " << w << '\n';
  {
    auto out = open_out(c.out_dir / ("global_" + tag + ".csv"));
    write_global_csv(out, full);
  }
  auto top = full;
  if (top.ranked.size() > c.top_k) top.ranked.resize(c.top_k);
  write_text(c.out_dir / ("global_" + tag + ".svg"),
             svg::stacked_bars(top, "Mean |SHAP| by cohort, " + std::string(display_name(
                                        c.explain_model)) + " (" + c.dataset + ")"));

  // Waterfalls for the PD participants with the highest predicted output.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (y[i] == 1) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return attributions[a].prediction > attributions[b].prediction;
  });
  if (order.size() > c.waterfall_samples) order.resize(c.waterfall_samples);
  for (std::size_t i : order) {
    const auto& a = attributions[i];
    const auto w = local_waterfall(a, c.top_k, m.feature_names, m.values.row(i));
    const std::string stem = "waterfall_" + tag + "_" + a.participant_id;
    {
      auto out = open_out(c.out_dir / (stem + ".csv"));
      write_waterfall_csv(out, a.participant_id, w);
    }
    write_text(c.out_dir / (stem + ".svg"),
               svg::waterfall_chart(w, "Participant " + a.participant_id, a.output_space));
  }

  std::cout << "explained " << attributions.size() << " samples (" << c.explain_scope
            << "); top features:";
  for (std::size_t r = 0; r < std::min<std::size_t>(3, full.ranked.size()); ++r) {
    std::cout << ' ' << full.ranked[r].feature_name;
  }
  std::cout << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Survey scoring, classification and tree-SHAP explanation pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> config_path, dataset, out, model;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> top_k;
  std::optional<unsigned> threads;
  std::optional<std::string> scope;
  app.add_option("--config", config_path, "Run configuration (JSON)");
  app.add_option("--dataset", dataset, "subjective | objective | combined")
      ->check(CLI::IsMember({"subjective", "objective", "combined"}));
  app.add_option("--seed", seed, "Seed for synthesis, splitting and model fitting");
  app.add_option("--out", out, "Output directory (overrides SCOPEPD_OUT and the config)");
  app.add_option("--model", model, "lr | knn | rf | gbm | all")
      ->check(CLI::IsMember({"lr", "knn", "rf", "gbm", "all"}));
  app.add_option("--top-k", top_k, "Features shown in explanation figures")
      ->check(CLI::PositiveNumber);
  app.add_option("--threads", threads, "Worker threads (0 = all cores)");
  app.add_option("--scope", scope, "Explanation set: cohort | test")
      ->check(CLI::IsMember({"cohort", "test"}));

  auto* synth = app.add_subcommand("synth", "Generate a synthetic response CSV");
  auto* score = app.add_subcommand("score", "Score responses into a feature matrix");
  auto* train = app.add_subcommand("train-eval", "Grid search, cross-validate and evaluate models");
  auto* explain = app.add_subcommand("explain", "Tree-SHAP attributions for a trained model");
  auto* report = app.add_subcommand("report", "Render the metric table from saved metrics");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig c = load_config(config_path ? std::optional<fs::path>(*config_path) : std::nullopt);
    if (const char* env = std::getenv("SCOPEPD_OUT"); env && *env) c.out_dir = env;
    if (out) c.out_dir = *out;
    if (dataset) c.dataset = *dataset;
    if (seed) c.split.seed = *seed;
    if (top_k) c.top_k = *top_k;
    if (threads) c.threads = *threads;
    if (scope) c.explain_scope = *scope;
    if (model) {
      c.models = parse_models(*model);
      if (*model != "all") c.explain_model = parse_family(*model);
    }
    validate_config(c);

    if (synth->parsed()) return cmd_synth(c);
    if (score->parsed()) return cmd_score(c);
    if (train->parsed()) return cmd_train_eval(c);
    if (explain->parsed()) return cmd_explain(c);
    if (report->parsed()) return cmd_report(c);
  } catch (const scopepd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
