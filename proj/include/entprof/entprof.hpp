#pragma once

#include "entprof/baselines.hpp"
#include "entprof/classifier.hpp"
#include "entprof/config.hpp"
#include "entprof/csv.hpp"
#include "entprof/cv.hpp"
#include "entprof/error.hpp"
#include "entprof/estimation.hpp"
#include "entprof/eval_stats.hpp"
#include "entprof/feature_cache.hpp"
#include "entprof/features.hpp"
#include "entprof/forest.hpp"
#include "entprof/isotonic.hpp"
#include "entprof/logreg.hpp"
#include "entprof/matrix.hpp"
#include "entprof/mlp.hpp"
#include "entprof/model.hpp"
#include "entprof/model_io.hpp"
#include "entprof/rng.hpp"
#include "entprof/sweep.hpp"
#include "entprof/synth.hpp"
#include "entprof/trace.hpp"
#include "entprof/trace_io.hpp"
#include "entprof/zscaler.hpp"
