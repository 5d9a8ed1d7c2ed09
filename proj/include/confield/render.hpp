// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

#include "confield/camera.hpp"
#include "confield/field.hpp"
#include "confield/image.hpp"
#include "confield/sampling.hpp"
#include "confield/volume.hpp"

namespace confield {

/// Everything a renderer needs beyond the model: scene bounds for input
/// normalization, ray depth range, background color, sample count.
struct RenderContext {
  Aabb bounds;
  double t_near = 0.5;
  double t_far = 4.5;
  Vec3 background{0, 0, 0};
  int samples_per_ray = 64;
};

namespace detail {

// Ray bundle for a contiguous pixel range. Points are sample-major
// (index = s * rays + ray) to line up with the volume module's channel view.
struct PixelChunk {
  Eigen::Index rays = 0;
  MatX<double> tvals;   // rays x m
  VecX<double> tfar;    // rays
  MatX<double> points;  // (rays*m) x 3, normalized to bounds
  MatX<double> dirs;    // (rays*m) x 3, unit
};

inline PixelChunk build_pixel_chunk(const CameraModel& cam, const RenderContext& ctx,
                                    std::uint64_t seed, int px_begin, int px_end) {
  PixelChunk ck;
  const int m = ctx.samples_per_ray;
  ck.rays = px_end - px_begin;
  ck.tvals.resize(ck.rays, m);
  ck.tfar = VecX<double>::Constant(ck.rays, ctx.t_far);
  ck.points.resize(ck.rays * m, 3);
  ck.dirs.resize(ck.rays * m, 3);
  for (int p = px_begin; p < px_end; ++p) {
    const Eigen::Index r = p - px_begin;
    const int u = p % cam.intr.width;
    const int v = p / cam.intr.width;
    Rng rng = Rng::keyed(seed, {streams::render, static_cast<std::uint64_t>(p)});
    const Ray ray = generate_ray(cam, u, v, ctx.t_near, ctx.t_far);
    const std::vector<double> ts = stratified_samples(ray, m, rng);
    for (int s = 0; s < m; ++s) {
      ck.tvals(r, s) = ts[static_cast<std::size_t>(s)];
      const Vec3 pt = ctx.bounds.normalize(ray.origin + ray.dir * ts[static_cast<std::size_t>(s)]);
      const Eigen::Index row = static_cast<Eigen::Index>(s) * ck.rays + r;
      ck.points(row, 0) = pt.x;
      ck.points(row, 1) = pt.y;
      ck.points(row, 2) = pt.z;
      ck.dirs(row, 0) = ray.dir.x;
      ck.dirs(row, 1) = ray.dir.y;
      ck.dirs(row, 2) = ray.dir.z;
    }
  }
  return ck;
}

// Fixed chunk height in pixel rows; independent of thread count so that
// threaded and sequential renders see identical batches.
inline constexpr int kChunkRows = 8;

template <typename ChunkRenderFn>
void render_chunks(const CameraModel& cam, ChunkRenderFn&& render_chunk, int threads) {
  const int total = cam.intr.width * cam.intr.height;
  const int chunk_px = kChunkRows * cam.intr.width;
  const int n_chunks = (total + chunk_px - 1) / chunk_px;
  if (threads <= 1) {
    for (int c = 0; c < n_chunks; ++c)
      render_chunk(c * chunk_px, std::min(total, (c + 1) * chunk_px));
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1))
        render_chunk(c * chunk_px, std::min(total, (c + 1) * chunk_px));
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// Renders a full image from the trained field. Deterministic given (seed,
/// camera, context); per-pixel RNG streams are keyed by pixel index, so the
/// thread count does not change the output.
template <typename Real>
Image render_image(std::span<const Real> params, const MlpArchitecture& arch,
                   const EncodingConfig& enc, const CameraModel& cam, const RenderContext& ctx,
                   std::uint64_t seed, int threads = 1) {
  cam.validate();
  enc.validate();
  Image img(cam.intr.width, cam.intr.height);
  detail::render_chunks(
      cam,
      [&](int px_begin, int px_end) {
        const detail::PixelChunk ck = detail::build_pixel_chunk(cam, ctx, seed, px_begin, px_end);
        const Eigen::Index n = ck.points.rows();
        MatX<Real> inputs(n, arch.pos_enc_dim + arch.dir_enc_dim);
        inputs.leftCols(arch.pos_enc_dim) = encode_batch<Real>(
            ck.points.template cast<Real>(), enc.pos_frequencies, enc.include_identity);
        inputs.rightCols(arch.dir_enc_dim) = encode_batch<Real>(
            ck.dirs.template cast<Real>(), enc.dir_frequencies, enc.include_identity);
        const FieldBatch<Real> fb = field_forward<Real>(params, arch, std::move(inputs));
        Eigen::Map<const MatX<Real>> sig(fb.sigma.data(), ck.rays, ctx.samples_per_ray);
        const RenderBatch<Real> rb =
            render_rays<Real>(sig, fb.color, ck.tvals.template cast<Real>().eval(),
                              ck.tfar.template cast<Real>().eval(), ctx.background);
        for (Eigen::Index r = 0; r < ck.rays; ++r) {
          const int p = px_begin + static_cast<int>(r);
          img.set(p % img.width, p / img.width,
                  {static_cast<double>(rb.color(r, 0)), static_cast<double>(rb.color(r, 1)),
                   static_cast<double>(rb.color(r, 2))});
        }
      },
      threads);
  return img;
}

/// Renders through an arbitrary field functor `(const Vec3& world_point) ->
/// FieldSample` with the same quadrature; used for analytic ground-truth
/// scenes. The functor sees world coordinates, not normalized ones.
template <typename FieldFn>
Image render_image_field(FieldFn&& field, const CameraModel& cam, const RenderContext& ctx,
                         std::uint64_t seed, int threads = 1) {
  cam.validate();
  Image img(cam.intr.width, cam.intr.height);
  detail::render_chunks(
      cam,
      [&](int px_begin, int px_end) {
        const int m = ctx.samples_per_ray;
        const Eigen::Index rays = px_end - px_begin;
        // Rebuild world-space points: the chunk stores normalized ones.
        MatX<double> sigma(rays, m);
        MatX<double> colors(rays * m, 3);
        MatX<double> tvals(rays, m);
        for (int p = px_begin; p < px_end; ++p) {
          const Eigen::Index r = p - px_begin;
          Rng rng = Rng::keyed(seed, {streams::render, static_cast<std::uint64_t>(p)});
          const Ray ray =
              generate_ray(cam, p % cam.intr.width, p / cam.intr.width, ctx.t_near, ctx.t_far);
          const std::vector<double> ts = stratified_samples(ray, m, rng);
          for (int s = 0; s < m; ++s) {
            tvals(r, s) = ts[static_cast<std::size_t>(s)];
            const FieldSample fs = field(ray.origin + ray.dir * ts[static_cast<std::size_t>(s)]);
            sigma(r, s) = fs.sigma;
            const Eigen::Index row = static_cast<Eigen::Index>(s) * rays + r;
            colors(row, 0) = fs.color.x;
            colors(row, 1) = fs.color.y;
            colors(row, 2) = fs.color.z;
          }
        }
        const VecX<double> tfar = VecX<double>::Constant(rays, ctx.t_far);
        const RenderBatch<double> rb = render_rays<double>(sigma, colors, tvals, tfar, ctx.background);
        for (Eigen::Index r = 0; r < rays; ++r) {
          const int p = px_begin + static_cast<int>(r);
          img.set(p % img.width, p / img.width, {rb.color(r, 0), rb.color(r, 1), rb.color(r, 2)});
        }
      },
      threads);
  return img;
}

}  // namespace confield
