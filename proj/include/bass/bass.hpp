#pragma once

// Umbrella header for the bandwidth-aware cluster scheduling simulator.

#include "bass/engine.hpp"
#include "bass/error.hpp"
#include "bass/report.hpp"
#include "bass/scenario.hpp"
#include "bass/schedulers.hpp"
#include "bass/slot_ledger.hpp"
#include "bass/topology.hpp"
#include "bass/workload.hpp"
