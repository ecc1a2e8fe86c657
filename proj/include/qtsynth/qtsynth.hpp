#pragma once

#include "qtsynth/copula.hpp"
#include "qtsynth/errors.hpp"
#include "qtsynth/io.hpp"
#include "qtsynth/metrics.hpp"
#include "qtsynth/mfpca.hpp"
#include "qtsynth/qts.hpp"
#include "qtsynth/quaternion.hpp"
#include "qtsynth/rng.hpp"
#include "qtsynth/spline.hpp"
#include "qtsynth/stats.hpp"
#include "qtsynth/synthesis.hpp"
#include "qtsynth/tuning.hpp"
