/// \file cnmpc/cnmpc.hpp
/// \brief Umbrella header for the solver library (the CLI front end in
///        cnmpc/cli.hpp is included separately).

#pragma once

#include "cnmpc/continuation.hpp"
#include "cnmpc/errors.hpp"
#include "cnmpc/krylov.hpp"
#include "cnmpc/linalg.hpp"
#include "cnmpc/ocp.hpp"
#include "cnmpc/precond.hpp"
#include "cnmpc/sim.hpp"
#include "cnmpc/tfc.hpp"
