#pragma once

#include "ncurve/bezier.hpp"
#include "ncurve/datagen.hpp"
#include "ncurve/dataset_io.hpp"
#include "ncurve/encoder.hpp"
#include "ncurve/errors.hpp"
#include "ncurve/fit.hpp"
#include "ncurve/gaussian.hpp"
#include "ncurve/loss.hpp"
#include "ncurve/matching.hpp"
#include "ncurve/metrics.hpp"
#include "ncurve/model_io.hpp"
#include "ncurve/params.hpp"
#include "ncurve/rng.hpp"
