// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glycopipe/checkpoint.hpp"
#include "glycopipe/common.hpp"
#include "glycopipe/data/cohort.hpp"
#include "glycopipe/data/table.hpp"
#include "glycopipe/distributed/federated.hpp"
#include "glycopipe/distributed/pool.hpp"
#include "glycopipe/distributed/ring.hpp"
#include "glycopipe/explain/heatmap.hpp"
#include "glycopipe/explain/robustness.hpp"
#include "glycopipe/explain/shapley.hpp"
#include "glycopipe/hyperopt/asha.hpp"
#include "glycopipe/hyperopt/smbo.hpp"
#include "glycopipe/hyperopt/space.hpp"
#include "glycopipe/hyperopt/tune.hpp"
#include "glycopipe/model/config.hpp"
#include "glycopipe/model/fusion.hpp"
#include "glycopipe/model/lstm.hpp"
#include "glycopipe/model/metrics.hpp"
#include "glycopipe/model/quantize.hpp"
#include "glycopipe/model/serialize.hpp"
#include "glycopipe/model/train.hpp"
#include "glycopipe/preprocess/feature_matrix.hpp"
#include "glycopipe/preprocess/forest.hpp"
#include "glycopipe/preprocess/state.hpp"
#include "glycopipe/preprocess/transforms.hpp"
#include "glycopipe/privacy/dp.hpp"
#include "glycopipe/privacy/paillier.hpp"
#include "glycopipe/serve/autoscale.hpp"
#include "glycopipe/serve/cache.hpp"
#include "glycopipe/serve/pipeline.hpp"
#include "glycopipe/serve/simulator.hpp"
