#pragma once

// Everything except the JSON helpers (dquant/json_io.hpp).

#include <dquant/dataset.hpp>
#include <dquant/error.hpp>
#include <dquant/gbi.hpp>
#include <dquant/graph.hpp>
#include <dquant/online_dp.hpp>
#include <dquant/oracle.hpp>
#include <dquant/quantcore.hpp>
#include <dquant/reductions.hpp>
#include <dquant/rng.hpp>
