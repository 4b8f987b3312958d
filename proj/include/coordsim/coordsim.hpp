#pragma once

// Umbrella header for the whole toolkit: network model, Glauber dynamics,
// exact enumeration oracle, the three stochastic parameter updates, the
// coordination game layer, and the experiment harness.

#include "coordsim/cdm.hpp"
#include "coordsim/coord.hpp"
#include "coordsim/errors.hpp"
#include "coordsim/game.hpp"
#include "coordsim/graph.hpp"
#include "coordsim/harness.hpp"
#include "coordsim/numeric.hpp"
#include "coordsim/objective.hpp"
#include "coordsim/oracle.hpp"
#include "coordsim/rng.hpp"
#include "coordsim/scenario.hpp"
#include "coordsim/verify.hpp"
