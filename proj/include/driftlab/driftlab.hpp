#pragma once

// Everything at once.
#include "driftlab/config.hpp"
#include "driftlab/density.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/fp_solver.hpp"
#include "driftlab/grid.hpp"
#include "driftlab/hardliners.hpp"
#include "driftlab/io.hpp"
#include "driftlab/parallel.hpp"
#include "driftlab/params.hpp"
#include "driftlab/particles.hpp"
#include "driftlab/philox.hpp"
#include "driftlab/potential.hpp"
#include "driftlab/sweep.hpp"
#include "driftlab/visibility.hpp"
