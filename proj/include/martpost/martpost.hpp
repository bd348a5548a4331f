#pragma once

// Martingale posterior sampling by predictive resampling: posterior draws
// for parametric models are produced by imputing future observations from
// the model's own predictive distribution while updating the parameter with
// natural-gradient steps at learning rates 1/N, optionally completing the
// tail with a single Gaussian step.

#include "martpost/coverage.hpp"
#include "martpost/diagnostics.hpp"
#include "martpost/errors.hpp"
#include "martpost/estimators.hpp"
#include "martpost/families.hpp"
#include "martpost/io.hpp"
#include "martpost/linalg.hpp"
#include "martpost/model.hpp"
#include "martpost/regression.hpp"
#include "martpost/resampler.hpp"
#include "martpost/rng.hpp"
#include "martpost/stats.hpp"
#include "martpost/tail_weight.hpp"
