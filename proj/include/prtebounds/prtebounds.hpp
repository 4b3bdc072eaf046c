#pragma once

#include "numerics.hpp"
#include "model.hpp"
#include "targets.hpp"
#include "dgp.hpp"
#include "assembler.hpp"
#include "lp_solver.hpp"
#include "qp_solver.hpp"
#include "optimizer.hpp"
#include "bounds.hpp"
#include "inference.hpp"
#include "validate.hpp"
#include "report.hpp"
