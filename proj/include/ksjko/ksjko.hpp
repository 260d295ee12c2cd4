#pragma once

#include "ksjko/diagnostics.hpp"
#include "ksjko/energetics.hpp"
#include "ksjko/equilibrium.hpp"
#include "ksjko/error.hpp"
#include "ksjko/grid.hpp"
#include "ksjko/jko.hpp"
#include "ksjko/lagrangian.hpp"
#include "ksjko/params.hpp"
#include "ksjko/potential.hpp"
#include "ksjko/quantile.hpp"
#include "ksjko/random_states.hpp"
#include "ksjko/reference_fd.hpp"
#include "ksjko/tridiag.hpp"
