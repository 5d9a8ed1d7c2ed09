// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "confield/errors.hpp"
#include "confield/geometry.hpp"

namespace confield {

template <typename Real>
using MatX = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Real>
using VecX = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

/// Sinusoidal feature lift configuration. Positions and directions may use a
/// different number of frequency octaves.
struct EncodingConfig {
  int pos_frequencies = 6;   // desk-scale default; 10 matches full-scale NeRF
  int dir_frequencies = 4;
  bool include_identity = true;

  void validate() const {
    if (pos_frequencies < 1) throw ContractError("pos_frequencies must be >= 1");
    if (dir_frequencies < 0) throw ContractError("dir_frequencies must be >= 0");
  }
};

/// Encoded length for one 3-vector: 3*2E sinusoids, plus the raw vector when
/// the identity prefix is enabled.
inline int encoded_dim(int frequencies, bool include_identity) {
  return 3 * 2 * frequencies + (include_identity ? 3 : 0);
}

/// Encodes one 3-vector. Layout: optional identity prefix (x,y,z), then
/// component-major sinusoids: for each component, (sin 2^0 x, cos 2^0 x, ...,
/// sin 2^{E-1} x, cos 2^{E-1} x).
inline std::vector<double> positional_encode(const Vec3& x, int frequencies,
                                             bool include_identity) {
  if (frequencies < 1) throw ContractError("positional_encode: frequencies must be >= 1");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(encoded_dim(frequencies, include_identity)));
  if (include_identity) {
    out.push_back(x.x);
    out.push_back(x.y);
    out.push_back(x.z);
  }
  for (int k = 0; k < 3; ++k) {
    double scaled = x[static_cast<std::size_t>(k)];
    for (int e = 0; e < frequencies; ++e) {
      out.push_back(std::sin(scaled));
      out.push_back(std::cos(scaled));
      scaled *= 2.0;
    }
  }
  return out;
}

/// Batched encoding: rows of `xyz` (n x 3) map to rows of the result
/// (n x encoded_dim). Same layout as the scalar path.
template <typename Real>
MatX<Real> encode_batch(const MatX<Real>& xyz, int frequencies, bool include_identity) {
  if (frequencies < 1) throw ContractError("encode_batch: frequencies must be >= 1");
  if (xyz.cols() != 3) throw ContractError("encode_batch: input must be n x 3");
  const Eigen::Index n = xyz.rows();
  MatX<Real> out(n, encoded_dim(frequencies, include_identity));
  Eigen::Index col = 0;
  if (include_identity) {
    out.leftCols(3) = xyz;
    col = 3;
  }
  VecX<Real> scaled(n);
  for (int k = 0; k < 3; ++k) {
    scaled = xyz.col(k);
    for (int e = 0; e < frequencies; ++e) {
      out.col(col++) = scaled.array().sin();
      out.col(col++) = scaled.array().cos();
      scaled *= Real(2);
    }
  }
  return out;
}

}  // namespace confield
