#pragma once

// Umbrella header for the censored point-centered-quarter density toolkit.

#include "pcqm/config.hpp"
#include "pcqm/errors.hpp"
#include "pcqm/estimators.hpp"
#include "pcqm/evaluate.hpp"
#include "pcqm/ingest.hpp"
#include "pcqm/model.hpp"
#include "pcqm/optimize.hpp"
#include "pcqm/rng.hpp"
#include "pcqm/sample.hpp"
#include "pcqm/simulate.hpp"
#include "pcqm/specfun.hpp"
#include "pcqm/text.hpp"
