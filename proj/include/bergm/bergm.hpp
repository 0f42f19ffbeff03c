#pragma once

#include "bergm/error.hpp"
#include "bergm/rng.hpp"
#include "bergm/graph.hpp"
#include "bergm/io.hpp"
#include "bergm/model.hpp"
#include "bergm/stats.hpp"
#include "bergm/sampler.hpp"
#include "bergm/pseudo.hpp"
#include "bergm/parallel.hpp"
#include "bergm/prior.hpp"
#include "bergm/exchange.hpp"
#include "bergm/summary.hpp"
#include "bergm/adjust.hpp"
#include "bergm/evidence.hpp"
#include "bergm/gof.hpp"
