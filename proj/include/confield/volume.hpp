// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "confield/encoding.hpp"
#include "confield/errors.hpp"
#include "confield/geometry.hpp"

namespace confield {

// Batched quadrature volume rendering. Matrices are (rays x samples); sample
// attribute buffers coming from the field are flat with point index
// s * n_rays + ray, so each channel column reinterprets as a (rays x samples)
// column-major matrix with no copying.

template <typename Real>
Eigen::Map<const MatX<Real>> sample_channel(const MatX<Real>& flat, int channel,
                                            Eigen::Index rays, Eigen::Index samples) {
  return {flat.col(channel).data(), rays, samples};
}

template <typename Real>
struct RenderBatch {
  MatX<Real> delta;          // segment lengths
  MatX<Real> survive;        // exp(-sigma * delta)
  MatX<Real> trans;          // transmittance before each sample
  MatX<Real> weights;        // quadrature weights
  VecX<Real> residual;       // transmittance past the last sample
  MatX<Real> color;          // rays x 3 composited
};

/// Forward quadrature. `sigma` is (rays x samples), `sample_colors` is
/// (rays*samples x 3) in sample-major order, `tvals` (rays x samples) sorted
/// per row, `t_far` per ray. Residual transmittance composites `background`.
template <typename Real>
RenderBatch<Real> render_rays(const MatX<Real>& sigma, const MatX<Real>& sample_colors,
                              const MatX<Real>& tvals, const VecX<Real>& t_far,
                              const Vec3& background) {
  const Eigen::Index r = sigma.rows();
  const Eigen::Index m = sigma.cols();
  if (tvals.rows() != r || tvals.cols() != m || t_far.size() != r ||
      sample_colors.rows() != r * m || sample_colors.cols() != 3)
    throw ContractError("render_rays: shape mismatch");
  if (m > 1 && (tvals.rightCols(m - 1) - tvals.leftCols(m - 1)).minCoeff() < Real(0))
    throw ContractError("render_rays: t-values must be nondecreasing per ray");
  if ((t_far - tvals.col(m - 1)).minCoeff() < Real(0))
    throw ContractError("render_rays: t_far must not precede the last sample");
  if (sigma.minCoeff() < Real(0)) throw ContractError("render_rays: sigma must be >= 0");

  RenderBatch<Real> b;
  b.delta.resize(r, m);
  if (m > 1) b.delta.leftCols(m - 1) = tvals.rightCols(m - 1) - tvals.leftCols(m - 1);
  b.delta.col(m - 1) = t_far - tvals.col(m - 1);

  b.survive = (-(sigma.array() * b.delta.array())).exp();
  b.trans.resize(r, m);
  b.trans.col(0).setOnes();
  for (Eigen::Index s = 1; s < m; ++s)
    b.trans.col(s) = b.trans.col(s - 1).cwiseProduct(b.survive.col(s - 1));
  b.weights = b.trans.array() * (Real(1) - b.survive.array());
  b.residual = b.trans.col(m - 1).cwiseProduct(b.survive.col(m - 1));

  const double bg[3] = {background.x, background.y, background.z};
  b.color.resize(r, 3);
  for (int ch = 0; ch < 3; ++ch) {
    const auto chan = sample_channel(sample_colors, ch, r, m);
    b.color.col(ch) = (b.weights.array() * chan.array()).rowwise().sum().matrix() +
                      static_cast<Real>(bg[ch]) * b.residual;
  }
  return b;
}

/// Reverse pass: given dLoss/dColor (rays x 3), produces dLoss/dSigma
/// (rays x samples) and dLoss/dSampleColors (rays*samples x 3).
template <typename Real>
void render_backward(const RenderBatch<Real>& b, const MatX<Real>& sample_colors,
                     const MatX<Real>& dcolor, const Vec3& background, MatX<Real>& dsigma,
                     MatX<Real>& dsample_colors) {
  const Eigen::Index r = b.weights.rows();
  const Eigen::Index m = b.weights.cols();
  if (dcolor.rows() != r || dcolor.cols() != 3)
    throw ContractError("render_backward: dcolor must be rays x 3");

  // P(ray,s) = <c_s, dC_ray>; B(ray) = <background, dC_ray>.
  MatX<Real> P = MatX<Real>::Zero(r, m);
  dsample_colors.resize(r * m, 3);
  for (int ch = 0; ch < 3; ++ch) {
    const auto chan = sample_channel(sample_colors, ch, r, m);
    P.array() += chan.array().colwise() * dcolor.col(ch).array();
    Eigen::Map<MatX<Real>> dchan(dsample_colors.col(ch).data(), r, m);
    dchan = b.weights.array().colwise() * dcolor.col(ch).array();
  }
  VecX<Real> bg_dot = dcolor.col(0) * static_cast<Real>(background.x) +
                      dcolor.col(1) * static_cast<Real>(background.y) +
                      dcolor.col(2) * static_cast<Real>(background.z);

  // Suffix sums over later samples: S(ray,s) = sum_{j>s} w_j P_j.
  MatX<Real> wp = b.weights.cwiseProduct(P);
  MatX<Real> suffix = MatX<Real>::Zero(r, m);
  for (Eigen::Index s = m - 2; s >= 0; --s)
    suffix.col(s) = suffix.col(s + 1) + wp.col(s + 1);

  dsigma = b.delta.array() *
           ((b.trans.array() * b.survive.array() * P.array() - suffix.array()).colwise() -
            (b.residual.array() * bg_dot.array()));
}

/// Mini-batch image reconstruction loss: sum over rays of the squared L2
/// color error, with its gradient 2*(pred - gt).
template <typename Real>
Real image_loss_and_grad(const MatX<Real>& predicted, const MatX<Real>& gt, MatX<Real>& grad) {
  if (predicted.rows() != gt.rows() || predicted.cols() != 3 || gt.cols() != 3)
    throw ContractError("image_loss_and_grad: shape mismatch");
  grad = Real(2) * (predicted - gt);
  return (predicted - gt).squaredNorm();
}

// ---------------------------------------------------------------------------
// Single-ray convenience wrappers (tests and small callers).

struct RayRenderResult {
  Vec3 color;
  std::vector<double> weights;
  std::vector<double> transmittance;
  double residual = 1.0;
};

inline RayRenderResult render_ray(std::span<const double> sigma, std::span<const Vec3> colors,
                                  std::span<const double> tvals, double t_far,
                                  const Vec3& background) {
  const Eigen::Index m = static_cast<Eigen::Index>(sigma.size());
  if (m < 1 || colors.size() != sigma.size() || tvals.size() != sigma.size())
    throw ContractError("render_ray: need equal, nonempty sigma/color/t arrays");
  MatX<double> sig(1, m), ts(1, m), cols(m, 3);
  VecX<double> tf(1);
  tf(0) = t_far;
  for (Eigen::Index i = 0; i < m; ++i) {
    sig(0, i) = sigma[static_cast<std::size_t>(i)];
    ts(0, i) = tvals[static_cast<std::size_t>(i)];
    const Vec3& c = colors[static_cast<std::size_t>(i)];
    cols(i, 0) = c.x;
    cols(i, 1) = c.y;
    cols(i, 2) = c.z;
  }
  RenderBatch<double> b = render_rays<double>(sig, cols, ts, tf, background);
  RayRenderResult out;
  out.color = {b.color(0, 0), b.color(0, 1), b.color(0, 2)};
  out.weights.resize(static_cast<std::size_t>(m));
  out.transmittance.resize(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    out.weights[static_cast<std::size_t>(i)] = b.weights(0, i);
    out.transmittance[static_cast<std::size_t>(i)] = b.trans(0, i);
  }
  out.residual = b.residual(0);
  return out;
}

}  // namespace confield
