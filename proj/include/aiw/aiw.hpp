#pragma once

// Average-interpolating wavelets on weighted graphs and point clouds.

#include "aiw/applications.hpp"
#include "aiw/error.hpp"
#include "aiw/graph.hpp"
#include "aiw/interpolate.hpp"
#include "aiw/io.hpp"
#include "aiw/partition.hpp"
#include "aiw/point_cloud.hpp"
#include "aiw/random.hpp"
#include "aiw/spectral.hpp"
#include "aiw/synth.hpp"
#include "aiw/transform.hpp"
