#pragma once

// Umbrella header for the dip library.

#include "dip/point.hpp"
#include "dip/rng.hpp"
#include "dip/groups.hpp"
#include "dip/measures.hpp"
#include "dip/dirichlet.hpp"
#include "dip/posterior.hpp"
#include "dip/convergence.hpp"
#include "dip/serialize.hpp"
