#pragma once

// Time-parallel ODE solving with the adaptive parareal algorithm: adaptive
// explicit/implicit integrators with cost instrumentation, tolerance-to-
// accuracy calibration charts, classical and adaptive parareal engines,
// and speedup/efficiency analysis.

#include "apara/analysis.hpp"
#include "apara/calibration.hpp"
#include "apara/cli.hpp"
#include "apara/config.hpp"
#include "apara/cost.hpp"
#include "apara/integrate.hpp"
#include "apara/ode_system.hpp"
#include "apara/parareal.hpp"
#include "apara/partition.hpp"
#include "apara/problems.hpp"
#include "apara/report.hpp"
#include "apara/schedule.hpp"
#include "apara/solver_config.hpp"
#include "apara/step_control.hpp"
#include "apara/types.hpp"
#include "apara/warm_start.hpp"
