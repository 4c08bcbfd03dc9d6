#pragma once

#include <string>
#include <string_view>

#include "scopepd/error.hpp"

namespace scopepd {

enum class CohortLabel { PD, HC, Prodromal, SWEDD };

inline std::string_view to_string(CohortLabel c) {
  switch (c) {
    case CohortLabel::PD: return "PD";
    case CohortLabel::HC: return "HC";
    case CohortLabel::Prodromal: return "Prodromal";
    case CohortLabel::SWEDD: return "SWEDD";
  }
  return "?";
}

inline CohortLabel parse_cohort(std::string_view s) {
  if (s == "PD") return CohortLabel::PD;
  if (s == "HC") return CohortLabel::HC;
  if (s == "Prodromal") return CohortLabel::Prodromal;
  if (s == "SWEDD") return CohortLabel::SWEDD;
  throw ValidationError("unknown cohort label '" + std::string(s) + "'");
}

// Binary target: PD is the positive class (1), HC the negative class (0).
inline int binary_label(CohortLabel c) {
  switch (c) {
    case CohortLabel::PD: return 1;
    case CohortLabel::HC: return 0;
    default:
      throw ValidationError("cohort " + std::string(to_string(c)) +
                            " has no binary PD/HC label");
  }
}

}  // namespace scopepd
