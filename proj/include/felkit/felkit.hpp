#pragma once

// Convenience umbrella: pulls in the special-function layer, the series
// evaluators, the solver, and the finite-difference verification oracle.
// The CLI front end (cli.hpp) is left out because it drags in CLI11.

#include "felkit/oracle.hpp"
#include "felkit/series.hpp"
#include "felkit/solver.hpp"
#include "felkit/special.hpp"
