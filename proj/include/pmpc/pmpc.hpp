/// @file pmpc.hpp
/// @brief Umbrella header.
#pragma once

#include "pmpc/core.hpp"
#include "pmpc/contact.hpp"
#include "pmpc/centroidal.hpp"
#include "pmpc/solver.hpp"
#include "pmpc/horizon.hpp"
#include "pmpc/mpc.hpp"
#include "pmpc/baseline.hpp"
#include "pmpc/gait.hpp"
#include "pmpc/sim.hpp"
#include "pmpc/benchmark.hpp"
#include "pmpc/verify.hpp"
#include "pmpc/config.hpp"
