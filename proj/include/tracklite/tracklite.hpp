#pragma once

#include "tracklite/association.hpp"
#include "tracklite/clustering.hpp"
#include "tracklite/common.hpp"
#include "tracklite/filter.hpp"
#include "tracklite/geometry.hpp"
#include "tracklite/io.hpp"
#include "tracklite/metrics.hpp"
#include "tracklite/scenario_sim.hpp"
#include "tracklite/tracker.hpp"
