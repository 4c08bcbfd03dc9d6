// Scores one synthetic participant against the shipped battery and prints
// the direction-aligned features of each instrument.

#include <cstdio>

#include "scopepd/scopepd.hpp"

int main(int argc, char** argv) {
  using namespace scopepd;
  const std::string path = argc > 1 ? argv[1] : SCOPEPD_CONFIG_DIR "/instruments.json";
  const auto battery = survey::load_battery_file(path);

  auto plan = synth::default_plan();
  plan.n_pd = 1;
  plan.n_hc = 1;
  const auto records = group_records(synth::generate_cohort(plan, battery));

  for (const auto& rec : records) {
    if (rec.participant_id != "SYN00001") continue;
    for (const auto& spec : battery) {
      if (spec.name != rec.instrument) continue;
      const auto features = survey::align_direction(survey::score_instrument(spec, rec), spec);
      std::printf("%s (%zu)\n", spec.name.c_str(), features.size());
      for (const auto& f : features) {
        if (f.value) std::printf("  %-22s %g\n", f.name.c_str(), *f.value);
      }
    }
  }
  return 0;
}
