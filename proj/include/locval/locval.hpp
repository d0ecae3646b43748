#pragma once

#include "locval/acquisition.hpp"
#include "locval/bench.hpp"
#include "locval/bounds.hpp"
#include "locval/config.hpp"
#include "locval/core.hpp"
#include "locval/csv.hpp"
#include "locval/doe.hpp"
#include "locval/gp.hpp"
#include "locval/gp_io.hpp"
#include "locval/kernel.hpp"
#include "locval/limitstate.hpp"
#include "locval/report.hpp"
#include "locval/runner.hpp"
#include "locval/suite.hpp"
