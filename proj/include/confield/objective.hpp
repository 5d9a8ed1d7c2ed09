// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "confield/dataset.hpp"
#include "confield/field.hpp"
#include "confield/metrics.hpp"
#include "confield/render.hpp"
#include "confield/sampling.hpp"
#include "confield/volume.hpp"

namespace confield {

/// Diagnostic gradient breakdown recorded in the training trace.
struct GradNorms {
  double trunk_total = 0.0;
  std::vector<double> per_layer;
};

/// A local training objective. `loss_and_grad` draws its own mini-batch from
/// an RNG stream keyed by (outer_iter, inner_step), never by call order, so
/// results are independent of agent scheduling.
template <typename Real>
class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::size_t dim() const = 0;
  virtual double loss_and_grad(std::span<const Real> theta, std::span<Real> grad,
                               std::int64_t outer_iter, int inner_step) = 0;
  virtual GradNorms grad_norms(std::span<const Real> grad) const { return {}; }
};

/// Photometric NeRF objective over one agent's shard: samples a ray batch,
/// renders it, and backpropagates the summed squared color error.
template <typename Real>
class NerfObjective final : public Objective<Real> {
 public:
  NerfObjective(MlpArchitecture arch, EncodingConfig enc, PosedDataset shard, int rays_per_batch,
                int samples_per_ray, std::uint64_t seed, std::uint64_t stream_salt)
      : arch_(arch),
        enc_(enc),
        shard_(std::move(shard)),
        rays_per_batch_(rays_per_batch),
        samples_per_ray_(samples_per_ray),
        seed_(seed),
        stream_salt_(stream_salt) {
    arch_.validate();
    enc_.validate();
    if (shard_.frames.empty()) throw ContractError("NerfObjective: shard has no frames");
    if (rays_per_batch_ < 1 || samples_per_ray_ < 1)
      throw ContractError("NerfObjective: batch sizes must be >= 1");
    if (encoded_dim(enc_.pos_frequencies, enc_.include_identity) != arch_.pos_enc_dim ||
        encoded_dim(enc_.dir_frequencies, enc_.include_identity) != arch_.dir_enc_dim)
      throw ContractError("NerfObjective: encoding dims do not match architecture");
    dim_ = param_count(arch_);
  }

  std::size_t dim() const override { return dim_; }

  double loss_and_grad(std::span<const Real> theta, std::span<Real> grad,
                       std::int64_t outer_iter, int inner_step) override {
    Rng rng = Rng::keyed(seed_, {streams::batch, stream_salt_,
                                 static_cast<std::uint64_t>(outer_iter),
                                 static_cast<std::uint64_t>(inner_step)});
    const Eigen::Index rays = rays_per_batch_;
    const int m = samples_per_ray_;
    const Eigen::Index n = rays * m;

    MatX<double> points(n, 3), dirs(n, 3);
    MatX<Real> tvals(rays, m), gt(rays, 3);
    const VecX<Real> tfar = VecX<Real>::Constant(rays, static_cast<Real>(shard_.t_far));
    for (Eigen::Index r = 0; r < rays; ++r) {
      const std::size_t fi = rng.below(shard_.frames.size());
      const PosedFrame& frame = shard_.frames[fi];
      const int u = static_cast<int>(rng.below(static_cast<std::uint64_t>(shard_.intrinsics.width)));
      const int v = static_cast<int>(rng.below(static_cast<std::uint64_t>(shard_.intrinsics.height)));
      const Vec3 c = frame.image.get(u, v);
      gt(r, 0) = static_cast<Real>(c.x);
      gt(r, 1) = static_cast<Real>(c.y);
      gt(r, 2) = static_cast<Real>(c.z);
      const Ray ray = generate_ray({shard_.intrinsics, frame.pose}, u, v, shard_.t_near, shard_.t_far);
      const std::vector<double> ts = stratified_samples(ray, m, rng);
      for (int s = 0; s < m; ++s) {
        tvals(r, s) = static_cast<Real>(ts[static_cast<std::size_t>(s)]);
        const Vec3 p = shard_.bounds.normalize(ray.origin + ray.dir * ts[static_cast<std::size_t>(s)]);
        const Eigen::Index row = static_cast<Eigen::Index>(s) * rays + r;
        points(row, 0) = p.x;
        points(row, 1) = p.y;
        points(row, 2) = p.z;
        dirs(row, 0) = ray.dir.x;
        dirs(row, 1) = ray.dir.y;
        dirs(row, 2) = ray.dir.z;
      }
    }

    MatX<Real> inputs(n, arch_.pos_enc_dim + arch_.dir_enc_dim);
    inputs.leftCols(arch_.pos_enc_dim) =
        encode_batch<Real>(points.cast<Real>(), enc_.pos_frequencies, enc_.include_identity);
    inputs.rightCols(arch_.dir_enc_dim) =
        encode_batch<Real>(dirs.cast<Real>(), enc_.dir_frequencies, enc_.include_identity);

    FieldBatch<Real> fb = field_forward<Real>(theta, arch_, std::move(inputs));
    Eigen::Map<const MatX<Real>> sigma(fb.sigma.data(), rays, m);
    const RenderBatch<Real> rb = render_rays<Real>(sigma, fb.color, tvals, tfar, shard_.background);

    MatX<Real> dcolor_pred;
    const double loss = static_cast<double>(image_loss_and_grad<Real>(rb.color, gt, dcolor_pred));

    MatX<Real> dsigma_rm, dsample_colors;
    render_backward<Real>(rb, fb.color, dcolor_pred, shard_.background, dsigma_rm, dsample_colors);
    // (rays x samples) -> flat sample-major column.
    MatX<Real> dsigma_flat(n, 1);
    Eigen::Map<MatX<Real>>(dsigma_flat.data(), rays, m) = dsigma_rm;
    field_backward<Real>(theta, arch_, fb, dsigma_flat, dsample_colors, grad);
    return loss;
  }

  GradNorms grad_norms(std::span<const Real> grad) const override {
    GradNorms g;
    g.per_layer = layer_grad_norms<Real>(grad, arch_);
    g.trunk_total = trunk_grad_norm<Real>(grad, arch_);
    return g;
  }

  const PosedDataset& shard() const { return shard_; }
  const MlpArchitecture& arch() const { return arch_; }

 private:
  MlpArchitecture arch_;
  EncodingConfig enc_;
  PosedDataset shard_;
  int rays_per_batch_;
  int samples_per_ray_;
  std::uint64_t seed_;
  std::uint64_t stream_salt_;
  std::size_t dim_ = 0;
};

/// Deterministic quadratic objective ||A theta - b||^2. Exercises the full
/// consensus machinery against closed-form least-squares oracles.
template <typename Real>
class QuadraticObjective final : public Objective<Real> {
 public:
  QuadraticObjective(MatX<Real> a, VecX<Real> b) : a_(std::move(a)), b_(std::move(b)) {
    if (a_.rows() != b_.size()) throw ContractError("QuadraticObjective: row mismatch");
  }

  /// Rows x dim system with N(0,1) entries, scaled by 1/sqrt(rows).
  static QuadraticObjective seeded(int rows, int dim, std::uint64_t seed) {
    Rng rng = Rng::keyed(seed, {streams::batch, 0xabcdull});
    MatX<Real> a(rows, dim);
    VecX<Real> b(rows);
    const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
    for (Eigen::Index i = 0; i < a.size(); ++i)
      a.data()[i] = static_cast<Real>(rng.normal() * scale);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = static_cast<Real>(rng.normal());
    return QuadraticObjective(std::move(a), std::move(b));
  }

  std::size_t dim() const override { return static_cast<std::size_t>(a_.cols()); }

  double loss_and_grad(std::span<const Real> theta, std::span<Real> grad, std::int64_t,
                       int) override {
    Eigen::Map<const VecX<Real>> th(theta.data(), a_.cols());
    Eigen::Map<VecX<Real>> g(grad.data(), a_.cols());
    const VecX<Real> resid = a_ * th - b_;
    g = Real(2) * a_.transpose() * resid;
    return static_cast<double>(resid.squaredNorm());
  }

  const MatX<Real>& a() const { return a_; }
  const VecX<Real>& b() const { return b_; }

 private:
  MatX<Real> a_;
  VecX<Real> b_;
};

}  // namespace confield
