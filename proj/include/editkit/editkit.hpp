#pragma once

// Umbrella header for the editkit toolkit: edit-mask extraction and loss
// weighting for image-editing corpora, plus a sharded-EMA equivalence
// simulator.

#include "editkit/codec.hpp"
#include "editkit/ema.hpp"
#include "editkit/image.hpp"
#include "editkit/manifest.hpp"
#include "editkit/maskgen.hpp"
#include "editkit/pipeline.hpp"
#include "editkit/rng.hpp"
#include "editkit/synth.hpp"
#include "editkit/weighting.hpp"
