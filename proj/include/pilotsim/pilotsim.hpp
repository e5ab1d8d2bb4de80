#pragma once

#include "bridge.hpp"
#include "config.hpp"
#include "error.hpp"
#include "experiment.hpp"
#include "metrics.hpp"
#include "pilot.hpp"
#include "random.hpp"
#include "resource.hpp"
#include "selection.hpp"
#include "simulator.hpp"
#include "strategy.hpp"
#include "trace.hpp"
#include "workload.hpp"
