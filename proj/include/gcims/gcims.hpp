#pragma once

// Umbrella header: the whole toolkit in one include.

#include "gcims/core.hpp"
#include "gcims/errors.hpp"
#include "gcims/eval.hpp"
#include "gcims/features.hpp"
#include "gcims/io.hpp"
#include "gcims/matrix.hpp"
#include "gcims/model_io.hpp"
#include "gcims/models.hpp"
#include "gcims/preprocess.hpp"
#include "gcims/rng.hpp"
#include "gcims/synthgen.hpp"
