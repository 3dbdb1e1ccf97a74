#pragma once

// Umbrella header for the causalcast toolkit: time-lagged causal discovery
// (PC1 + MCI with partial-correlation or GPDC conditional independence tests,
// plus a latent-aware mode) and quantization-token probabilistic forecasting
// with coverage evaluation.

#include "causalcast/augment.hpp"
#include "causalcast/citest.hpp"
#include "causalcast/common.hpp"
#include "causalcast/discovery.hpp"
#include "causalcast/distributions.hpp"
#include "causalcast/evalstats.hpp"
#include "causalcast/forecast.hpp"
#include "causalcast/gp.hpp"
#include "causalcast/graph.hpp"
#include "causalcast/io_json.hpp"
#include "causalcast/panel.hpp"
#include "causalcast/predictor.hpp"
#include "causalcast/quantizer.hpp"
#include "causalcast/rng.hpp"
#include "causalcast/version.hpp"
