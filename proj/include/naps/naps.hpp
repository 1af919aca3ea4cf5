#pragma once

// Umbrella header: conformal prediction sets for node classification on
// graphs, with neighborhood-adaptive calibration, synthetic benchmarks, and
// the repeated-split experiment harness.

#include "naps/aps.hpp"
#include "naps/conformal.hpp"
#include "naps/error.hpp"
#include "naps/graph.hpp"
#include "naps/harness.hpp"
#include "naps/io.hpp"
#include "naps/rng.hpp"
#include "naps/synthetic.hpp"
#include "naps/version.hpp"
