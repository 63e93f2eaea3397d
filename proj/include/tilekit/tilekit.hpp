#pragma once

#include "tilekit/colormap.hpp"
#include "tilekit/contours.hpp"
#include "tilekit/correlation.hpp"
#include "tilekit/error.hpp"
#include "tilekit/grid.hpp"
#include "tilekit/io.hpp"
#include "tilekit/parallel.hpp"
#include "tilekit/performance.hpp"
#include "tilekit/ranking.hpp"
#include "tilekit/render.hpp"
#include "tilekit/report.hpp"
#include "tilekit/tiles.hpp"
