#pragma once

// Umbrella header for the whole library.

#include "depthprep/core.hpp"
#include "depthprep/eval.hpp"
#include "depthprep/geom.hpp"
#include "depthprep/io.hpp"
#include "depthprep/kdtree.hpp"
#include "depthprep/pipeline.hpp"
#include "depthprep/ply.hpp"
#include "depthprep/prep.hpp"
#include "depthprep/scene.hpp"
#include "depthprep/synth.hpp"
#include "depthprep/upsample.hpp"
