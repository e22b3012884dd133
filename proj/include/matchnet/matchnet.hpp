#ifndef MATCHNET_MATCHNET_HPP
#define MATCHNET_MATCHNET_HPP

#include "matchnet/bounds.hpp"
#include "matchnet/engine.hpp"
#include "matchnet/errors.hpp"
#include "matchnet/experiment.hpp"
#include "matchnet/graph.hpp"
#include "matchnet/io.hpp"
#include "matchnet/model.hpp"
#include "matchnet/noise.hpp"
#include "matchnet/oracle.hpp"
#include "matchnet/policy.hpp"
#include "matchnet/rng.hpp"
#include "matchnet/stats.hpp"
#include "matchnet/svg.hpp"

#endif  // MATCHNET_MATCHNET_HPP
