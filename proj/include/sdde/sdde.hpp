#pragma once

#include "sdde/convergence.hpp"
#include "sdde/engine.hpp"
#include "sdde/errors.hpp"
#include "sdde/jump_measure.hpp"
#include "sdde/measure_change.hpp"
#include "sdde/model.hpp"
#include "sdde/parallel.hpp"
#include "sdde/pricer.hpp"
#include "sdde/quadrature.hpp"
#include "sdde/rng.hpp"
