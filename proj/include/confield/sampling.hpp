// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "confield/camera.hpp"
#include "confield/errors.hpp"
#include "confield/rng.hpp"

namespace confield {

/// Stratified depths along a ray: [t_near, t_far] split into n equal bins, one
/// uniform draw per bin. Output is nondecreasing and strictly inside the
/// bounds.
inline std::vector<double> stratified_samples(const Ray& ray, int n, Rng& rng) {
  if (n < 1) throw ContractError("stratified_samples: n must be >= 1");
  std::vector<double> ts(static_cast<std::size_t>(n));
  const double span = (ray.t_far - ray.t_near) / n;
  for (int i = 0; i < n; ++i) {
    const double lo = ray.t_near + i * span;
    ts[static_cast<std::size_t>(i)] = lo + rng.uniform() * span;
  }
  return ts;
}

}  // namespace confield
