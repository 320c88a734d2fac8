#pragma once

#include "fastatlas/baselines.hpp"
#include "fastatlas/charts.hpp"
#include "fastatlas/error.hpp"
#include "fastatlas/geometry.hpp"
#include "fastatlas/io.hpp"
#include "fastatlas/metrics.hpp"
#include "fastatlas/packing.hpp"
#include "fastatlas/pipeline.hpp"
#include "fastatlas/synthetic.hpp"
