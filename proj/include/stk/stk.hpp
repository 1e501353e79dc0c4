#pragma once

#include "stk/bench.hpp"
#include "stk/cn_baseline.hpp"
#include "stk/discretize.hpp"
#include "stk/errors.hpp"
#include "stk/la_core.hpp"
#include "stk/matrix_market.hpp"
#include "stk/outer_krylov.hpp"
#include "stk/quadrature.hpp"
#include "stk/report.hpp"
#include "stk/rhs_sep.hpp"
#include "stk/rksm.hpp"
#include "stk/splines.hpp"
#include "stk/sylvester.hpp"
#include "stk/types.hpp"
