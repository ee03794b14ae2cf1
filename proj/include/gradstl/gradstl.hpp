#pragma once

#include "gradstl/casestudy.hpp"
#include "gradstl/error.hpp"
#include "gradstl/expr.hpp"
#include "gradstl/formula.hpp"
#include "gradstl/optimize.hpp"
#include "gradstl/parser.hpp"
#include "gradstl/recursion.hpp"
#include "gradstl/robustness.hpp"
#include "gradstl/semantics.hpp"
#include "gradstl/signal.hpp"
#include "gradstl/smooth.hpp"
