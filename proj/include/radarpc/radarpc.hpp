#pragma once

// Umbrella header.

#include "radarpc/cfar.hpp"
#include "radarpc/cube.hpp"
#include "radarpc/geometry.hpp"
#include "radarpc/grid.hpp"
#include "radarpc/io.hpp"
#include "radarpc/metrics.hpp"
#include "radarpc/nn/gradcheck.hpp"
#include "radarpc/nn/loss.hpp"
#include "radarpc/nn/network.hpp"
#include "radarpc/nn/ops.hpp"
#include "radarpc/nn/tensor.hpp"
#include "radarpc/nn/train.hpp"
#include "radarpc/report.hpp"
#include "radarpc/util.hpp"
