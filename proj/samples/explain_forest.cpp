// Fits a small random forest on a synthetic cohort and prints the tree-SHAP
// waterfall for the participant with the highest predicted PD probability.

#include <cstdio>

#include "scopepd/scopepd.hpp"

int main() {
  using namespace scopepd;
  const auto battery = survey::load_battery_file(SCOPEPD_CONFIG_DIR "/instruments.json");
  auto plan = synth::default_plan();
  plan.n_pd = 120;
  plan.n_hc = 40;
  auto m = assemble_matrix(battery, group_records(synth::generate_cohort(plan, battery)));
  m = drop_missing(m, missing_threshold(m.rows(), 0.1));

  Hyperparams p;
  p.n_trees = 50;
  p.max_depth = 6;
  const auto pipe = fit_pipeline(ModelFamily::RF, p, m);
  const auto& forest = std::get<TreeEnsemble>(pipe.model);
  const auto x = apply_minmax(pipe.norm, m);

  std::size_t best = 0;
  for (std::size_t i = 1; i < x.rows(); ++i) {
    if (forest.predict_proba(x.values.row(i)) > forest.predict_proba(x.values.row(best))) best = i;
  }
  const auto a = treeshap(forest, x.values.row(best), x.participant_ids[best]);
  const auto w = local_waterfall(a, 5, m.feature_names, m.values.row(best));

  std::printf("%s  baseline %.4f\n", a.participant_id.c_str(), w.base_value);
  for (const auto& t : w.terms) {
    std::printf("  %-12s = %-4g  %+.4f\n", t.feature_name.c_str(), t.value, t.phi);
  }
  std::printf("  %zu others      %+.4f\n", w.remainder_count, w.remainder);
  std::printf("prediction %.4f\n", w.prediction);
  return 0;
}
