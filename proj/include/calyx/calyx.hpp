#pragma once

#include "calyx/annotations.hpp"
#include "calyx/blobs.hpp"
#include "calyx/core.hpp"
#include "calyx/eval.hpp"
#include "calyx/image_io.hpp"
#include "calyx/lighting.hpp"
#include "calyx/pipeline.hpp"
#include "calyx/preprocess.hpp"
#include "calyx/segmentation.hpp"
#include "calyx/synth.hpp"
#include "calyx/tiling.hpp"
