// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "confield/encoding.hpp"
#include "confield/errors.hpp"
#include "confield/geometry.hpp"
#include "confield/mlp.hpp"

namespace confield {

/// One radiance-field sample: emitted color in [0,1]^3 and non-negative
/// volume density.
struct FieldSample {
  Vec3 color;
  double sigma = 0.0;
};

namespace detail {

template <typename Real>
MatX<Real> apply_density_activation(const MatX<Real>& raw, DensityActivation act) {
  if (act == DensityActivation::relu) return raw.cwiseMax(Real(0));
  // softplus, linearized for large inputs where log(1+e^x) == x in Real.
  return (raw.array() > Real(30))
      .select(raw.array(), (raw.array().exp() + Real(1)).log())
      .matrix();
}

template <typename Real>
MatX<Real> density_activation_grad(const MatX<Real>& raw, DensityActivation act) {
  if (act == DensityActivation::relu)
    return (raw.array() > Real(0)).template cast<Real>().matrix();
  return (Real(1) / (Real(1) + (-raw.array()).exp())).matrix();
}

}  // namespace detail

/// Forward state for a batch of field queries; keeps everything the backward
/// pass needs.
template <typename Real>
struct FieldBatch {
  MlpForward<Real> mlp;
  MatX<Real> sigma;  // n x 1, activated
  MatX<Real> color;  // n x 3, activated
};

/// Runs the field network on pre-encoded inputs (rows: [encoded position |
/// encoded direction]). Density is view-independent by construction: the
/// direction encoding only feeds the color branch.
template <typename Real>
FieldBatch<Real> field_forward(std::span<const Real> params, const MlpArchitecture& arch,
                               MatX<Real> encoded_inputs) {
  FieldBatch<Real> b;
  b.mlp = mlp_forward<Real>(params, arch, std::move(encoded_inputs));
  b.sigma = detail::apply_density_activation<Real>(b.mlp.raw.col(0), arch.density_activation);
  // Fixed sigmoid color head.
  b.color = (Real(1) / (Real(1) + (-b.mlp.raw.rightCols(3).array()).exp())).matrix();
  return b;
}

/// Chains dLoss/dSigma (n x 1) and dLoss/dColor (n x 3) through the head
/// activations and the network. `grad_out` is overwritten.
template <typename Real>
void field_backward(std::span<const Real> params, const MlpArchitecture& arch,
                    const FieldBatch<Real>& b, const MatX<Real>& dsigma,
                    const MatX<Real>& dcolor, std::span<Real> grad_out,
                    MatX<Real>* input_grad = nullptr) {
  const Eigen::Index n = b.mlp.raw.rows();
  if (dsigma.rows() != n || dsigma.cols() != 1 || dcolor.rows() != n || dcolor.cols() != 3)
    throw ContractError("field_backward: upstream shape mismatch");
  MatX<Real> upstream(n, 4);
  upstream.col(0) =
      dsigma.cwiseProduct(detail::density_activation_grad<Real>(b.mlp.raw.col(0), arch.density_activation));
  upstream.rightCols(3) =
      dcolor.array() * b.color.array() * (Real(1) - b.color.array());
  mlp_backward<Real>(params, arch, b.mlp, upstream, grad_out, input_grad);
}

/// Point-wise field query. `points` must already be normalized to the scene
/// bounds (roughly [-1,1]^3); `dirs` must be unit within 1e-6.
template <typename Real>
std::vector<FieldSample> field_query(std::span<const Real> params, const MlpArchitecture& arch,
                                     const EncodingConfig& enc, std::span<const Vec3> points,
                                     std::span<const Vec3> dirs) {
  enc.validate();
  if (points.size() != dirs.size())
    throw ContractError("field_query: points and dirs must have equal length");
  if (encoded_dim(enc.pos_frequencies, enc.include_identity) != arch.pos_enc_dim ||
      encoded_dim(enc.dir_frequencies, enc.include_identity) != arch.dir_enc_dim)
    throw ContractError("field_query: encoding dims do not match architecture");
  for (const Vec3& d : dirs)
    if (std::abs(d.norm() - 1.0) > 1e-6)
      throw ContractError("field_query: directions must be unit vectors");

  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  MatX<Real> pts(n, 3), dmat(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3& p = points[static_cast<std::size_t>(i)];
    const Vec3& d = dirs[static_cast<std::size_t>(i)];
    pts(i, 0) = static_cast<Real>(p.x);
    pts(i, 1) = static_cast<Real>(p.y);
    pts(i, 2) = static_cast<Real>(p.z);
    dmat(i, 0) = static_cast<Real>(d.x);
    dmat(i, 1) = static_cast<Real>(d.y);
    dmat(i, 2) = static_cast<Real>(d.z);
  }
  MatX<Real> inputs(n, arch.pos_enc_dim + arch.dir_enc_dim);
  inputs.leftCols(arch.pos_enc_dim) =
      encode_batch<Real>(pts, enc.pos_frequencies, enc.include_identity);
  inputs.rightCols(arch.dir_enc_dim) =
      encode_batch<Real>(dmat, enc.dir_frequencies, enc.include_identity);
  FieldBatch<Real> fb = field_forward<Real>(params, arch, std::move(inputs));

  std::vector<FieldSample> out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    FieldSample& s = out[static_cast<std::size_t>(i)];
    s.sigma = static_cast<double>(fb.sigma(i, 0));
    s.color = {static_cast<double>(fb.color(i, 0)), static_cast<double>(fb.color(i, 1)),
               static_cast<double>(fb.color(i, 2))};
  }
  return out;
}

}  // namespace confield
