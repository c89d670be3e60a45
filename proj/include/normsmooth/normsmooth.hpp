#pragma once

#include "normsmooth/bench.hpp"
#include "normsmooth/data.hpp"
#include "normsmooth/first_order.hpp"
#include "normsmooth/hessian.hpp"
#include "normsmooth/linesearch.hpp"
#include "normsmooth/newton_cg.hpp"
#include "normsmooth/normal_map.hpp"
#include "normsmooth/prox.hpp"
#include "normsmooth/random.hpp"
#include "normsmooth/smooth.hpp"
#include "normsmooth/solver.hpp"
#include "normsmooth/types.hpp"
