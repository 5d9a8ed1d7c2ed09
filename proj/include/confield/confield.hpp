// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

// Umbrella header: multi-agent radiance-field training with consensus ADMM.

#pragma once

#include "confield/camera.hpp"
#include "confield/consensus.hpp"
#include "confield/csv.hpp"
#include "confield/dataset.hpp"
#include "confield/encoding.hpp"
#include "confield/errors.hpp"
#include "confield/experiment.hpp"
#include "confield/field.hpp"
#include "confield/geometry.hpp"
#include "confield/graph.hpp"
#include "confield/image.hpp"
#include "confield/metrics.hpp"
#include "confield/mlp.hpp"
#include "confield/objective.hpp"
#include "confield/render.hpp"
#include "confield/rng.hpp"
#include "confield/sampling.hpp"
#include "confield/scene.hpp"
#include "confield/volume.hpp"
#include "confield/wire.hpp"
