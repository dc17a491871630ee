#pragma once

#include "cpboost/core.hpp"
#include "cpboost/dataset.hpp"
#include "cpboost/hypotheses.hpp"
#include "cpboost/loss.hpp"
#include "cpboost/convex_opt.hpp"
#include "cpboost/discrete_opt.hpp"
#include "cpboost/boost.hpp"
#include "cpboost/experiments.hpp"
#include "cpboost/config.hpp"
