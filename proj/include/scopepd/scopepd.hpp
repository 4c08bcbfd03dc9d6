#pragma once

#include "scopepd/attribution.hpp"
#include "scopepd/classifier.hpp"
#include "scopepd/dataset.hpp"
#include "scopepd/evaluation.hpp"
#include "scopepd/metrics.hpp"
#include "scopepd/shapley_oracle.hpp"
#include "scopepd/survey_scoring.hpp"
#include "scopepd/svg.hpp"
#include "scopepd/synth.hpp"
#include "scopepd/treeshap.hpp"
