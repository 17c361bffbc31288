#pragma once

#include "incsfa/batch.hpp"
#include "incsfa/ccipca.hpp"
#include "incsfa/config.hpp"
#include "incsfa/csv.hpp"
#include "incsfa/error.hpp"
#include "incsfa/experiments.hpp"
#include "incsfa/generators.hpp"
#include "incsfa/hierarchy.hpp"
#include "incsfa/mca.hpp"
#include "incsfa/metrics.hpp"
#include "incsfa/rng.hpp"
#include "incsfa/signal.hpp"
#include "incsfa/unit.hpp"
#include "incsfa/unit_io.hpp"
