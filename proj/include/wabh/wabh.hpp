#pragma once

#include "wabh/error.hpp"
#include "wabh/glm.hpp"
#include "wabh/grf.hpp"
#include "wabh/io.hpp"
#include "wabh/normal.hpp"
#include "wabh/prior.hpp"
#include "wabh/procedures.hpp"
#include "wabh/report.hpp"
#include "wabh/sim.hpp"
#include "wabh/types.hpp"
#include "wabh/util.hpp"
#include "wabh/weights.hpp"
