#pragma once

// Umbrella header: spiked Fisher matrix construction, limiting-law
// quantities, and the Monte Carlo validation harness.

#include "sfl/assumptions.hpp"
#include "sfl/config_json.hpp"
#include "sfl/errors.hpp"
#include "sfl/moments.hpp"
#include "sfl/montecarlo.hpp"
#include "sfl/regime.hpp"
#include "sfl/report.hpp"
#include "sfl/rng.hpp"
#include "sfl/sampling.hpp"
#include "sfl/spectra.hpp"
#include "sfl/spike_model.hpp"
#include "sfl/stats.hpp"
#include "sfl/theta.hpp"
#include "sfl/verify.hpp"
#include "sfl/wachter.hpp"
