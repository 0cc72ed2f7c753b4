#pragma once

// Complex higher-order SVD analysis of multivariate time-series cohorts:
// analytic-signal complexification, Tucker decomposition, phase-feature
// projection with optional subject-factor rotation, Fisher ranking, and
// cross-validated linear discriminant evaluation.

#include "chosvd/classify.hpp"
#include "chosvd/cohort.hpp"
#include "chosvd/errors.hpp"
#include "chosvd/features.hpp"
#include "chosvd/hosvd.hpp"
#include "chosvd/io.hpp"
#include "chosvd/linalg.hpp"
#include "chosvd/pipeline.hpp"
#include "chosvd/rng.hpp"
#include "chosvd/signal.hpp"
#include "chosvd/tensor.hpp"
