#pragma once

#include "f4nls/error.hpp"
#include "f4nls/fft.hpp"
#include "f4nls/grid.hpp"
#include "f4nls/dispersion.hpp"
#include "f4nls/nonlinearity.hpp"
#include "f4nls/analysis.hpp"
#include "f4nls/integrators.hpp"
#include "f4nls/parallel.hpp"
#include "f4nls/experiments.hpp"
#include "f4nls/report_io.hpp"
#include "f4nls/config.hpp"
