#pragma once

#include "pcfe/commands.hpp"
#include "pcfe/config.hpp"
#include "pcfe/error.hpp"
#include "pcfe/eval.hpp"
#include "pcfe/gp_sim.hpp"
#include "pcfe/inference.hpp"
#include "pcfe/model.hpp"
#include "pcfe/rk45.hpp"
#include "pcfe/vfe.hpp"
