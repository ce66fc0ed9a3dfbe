#pragma once

// Umbrella header.

#include "wkelly/backtest.hpp"
#include "wkelly/data_ingest.hpp"
#include "wkelly/duality_suite.hpp"
#include "wkelly/errors.hpp"
#include "wkelly/experiments.hpp"
#include "wkelly/extended_real.hpp"
#include "wkelly/inner_oracle.hpp"
#include "wkelly/kelly.hpp"
#include "wkelly/program.hpp"
#include "wkelly/rng.hpp"
#include "wkelly/robust_solver.hpp"
#include "wkelly/types.hpp"
