// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "confield/dataset.hpp"
#include "confield/render.hpp"

namespace confield {

struct SphereShape {
  Vec3 center;
  double radius = 0.5;

  bool contains(const Vec3& p) const { return (p - center).norm() <= radius; }
};

struct BoxShape {
  Aabb box;

  bool contains(const Vec3& p) const { return box.contains(p); }
};

struct ScenePrimitive {
  std::variant<SphereShape, BoxShape> shape;
  double sigma0 = 20.0;
  Vec3 color{1, 1, 1};

  bool contains(const Vec3& p) const {
    return std::visit([&](const auto& s) { return s.contains(p); }, shape);
  }
};

/// Constant-density analytic scene: the ground-truth field used to generate
/// synthetic datasets and to sanity-check the renderer against closed forms.
struct AnalyticScene {
  std::vector<ScenePrimitive> primitives;
  Vec3 background{0, 0, 0};
  Aabb bounds{{-1, -1, -1}, {1, 1, 1}};
  double t_near = 1.0;
  double t_far = 4.5;

  void validate() const {
    for (const auto& p : primitives)
      if (!(p.sigma0 > 0) || !std::isfinite(p.sigma0))
        throw ContractError("primitive sigma0 must be finite and positive");
    if (!(t_near >= 0) || !(t_near < t_far)) throw ContractError("require 0 <= t_near < t_far");
  }
};

/// Density and color at a point: the first containing primitive wins; empty
/// space has zero density and the background color.
inline FieldSample analytic_query(const AnalyticScene& scene, const Vec3& p) {
  for (const ScenePrimitive& prim : scene.primitives)
    if (prim.contains(p)) return {prim.color, prim.sigma0};
  return {scene.background, 0.0};
}

/// Desk-scale default: two spheres and a box inside the unit-scale bound.
inline AnalyticScene default_desk_scene() {
  AnalyticScene s;
  s.primitives.push_back({SphereShape{{-0.35, -0.2, 0.05}, 0.38}, 24.0, {0.85, 0.25, 0.2}});
  s.primitives.push_back({SphereShape{{0.4, 0.25, -0.1}, 0.3}, 24.0, {0.2, 0.45, 0.85}});
  s.primitives.push_back(
      {BoxShape{Aabb{{-0.15, -0.55, -0.45}, {0.3, 0.0, 0.35}}}, 24.0, {0.25, 0.75, 0.3}});
  s.background = {0, 0, 0};
  s.bounds = Aabb{{-1, -1, -1}, {1, 1, 1}};
  s.t_near = 1.0;
  s.t_far = 4.8;
  return s;
}

inline CameraIntrinsics default_desk_intrinsics(int width = 64, int height = 64,
                                                double fov_x_deg = 50.0) {
  CameraIntrinsics intr;
  intr.width = width;
  intr.height = height;
  intr.fx = focal_from_fov_x(fov_x_deg * 3.14159265358979323846 / 180.0, width);
  intr.fy = intr.fx;
  intr.cx = 0.5 * width;
  intr.cy = 0.5 * height;
  return intr;
}

/// Evenly spaced poses on a circle at constant height, all looking at
/// `target`. `phase` rotates the whole ring; a half-step phase produces
/// viewpoints interleaved with the unphased ring (held-out views).
inline std::vector<Mat4> ring_poses(int count, double radius, double height,
                                    const Vec3& target = {0, 0, 0}, double phase = 0.0) {
  if (count < 1) throw ContractError("ring_poses: count must be >= 1");
  std::vector<Mat4> poses;
  poses.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double a = phase + 2.0 * 3.14159265358979323846 * i / count;
    poses.push_back(look_at_pose({radius * std::cos(a), radius * std::sin(a), height}, target));
  }
  return poses;
}

/// Renders each camera through the analytic field with the standard
/// quadrature. Deterministic per seed.
inline PosedDataset generate_dataset(const AnalyticScene& scene, const CameraIntrinsics& intr,
                                     const std::vector<Mat4>& poses, int samples_per_ray,
                                     std::uint64_t seed, int threads = 1) {
  scene.validate();
  if (poses.empty()) throw ContractError("generate_dataset: need at least one camera");
  PosedDataset ds;
  ds.intrinsics = intr;
  ds.bounds = scene.bounds;
  ds.t_near = scene.t_near;
  ds.t_far = scene.t_far;
  ds.background = scene.background;
  RenderContext ctx{scene.bounds, scene.t_near, scene.t_far, scene.background, samples_per_ray};
  for (std::size_t i = 0; i < poses.size(); ++i) {
    PosedFrame f;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%03u", static_cast<unsigned>(i));
    f.id = buf;
    f.pose = poses[i];
    const CameraModel cam{intr, poses[i]};
    f.image = render_image_field(
        [&](const Vec3& p) { return analytic_query(scene, p); }, cam, ctx,
        Rng::keyed(seed, {streams::dataset, i}).next_u64(), threads);
    ds.frames.push_back(std::move(f));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Scene specs in config files

/// Parses a scene spec: the string "default" or a JSON object
/// {"primitives": [{"type": "sphere"|"box", ...}], "background": [...],
///  "bounds": {...}, "t_near": .., "t_far": ..}.
inline AnalyticScene parse_scene(const nlohmann::json& spec) {
  if (spec.is_string()) {
    if (spec.get<std::string>() == "default") return default_desk_scene();
    throw ParseError(ParseError::Code::bad_value,
                     "unknown scene name: " + spec.get<std::string>());
  }
  if (!spec.is_object())
    throw ParseError(ParseError::Code::bad_value, "scene must be \"default\" or an object");
  AnalyticScene s;
  try {
    if (spec.contains("background")) {
      const auto& bg = spec.at("background");
      s.background = {bg.at(0).get<double>(), bg.at(1).get<double>(), bg.at(2).get<double>()};
    }
    if (spec.contains("bounds")) {
      const auto& b = spec.at("bounds");
      const auto& lo = b.at("lo");
      const auto& hi = b.at("hi");
      s.bounds.lo = {lo.at(0).get<double>(), lo.at(1).get<double>(), lo.at(2).get<double>()};
      s.bounds.hi = {hi.at(0).get<double>(), hi.at(1).get<double>(), hi.at(2).get<double>()};
    }
    s.t_near = spec.value("t_near", s.t_near);
    s.t_far = spec.value("t_far", s.t_far);
    for (const auto& pj : spec.at("primitives")) {
      ScenePrimitive prim;
      const auto& cj = pj.at("color");
      prim.color = {cj.at(0).get<double>(), cj.at(1).get<double>(), cj.at(2).get<double>()};
      prim.sigma0 = pj.at("sigma").get<double>();
      const std::string type = pj.at("type").get<std::string>();
      if (type == "sphere") {
        const auto& c = pj.at("center");
        prim.shape = SphereShape{{c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()},
                                 pj.at("radius").get<double>()};
      } else if (type == "box") {
        const auto& lo = pj.at("lo");
        const auto& hi = pj.at("hi");
        prim.shape = BoxShape{Aabb{{lo.at(0).get<double>(), lo.at(1).get<double>(), lo.at(2).get<double>()},
                                   {hi.at(0).get<double>(), hi.at(1).get<double>(), hi.at(2).get<double>()}}};
      } else {
        throw ParseError(ParseError::Code::bad_value, "unknown primitive type: " + type);
      }
      s.primitives.push_back(std::move(prim));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseError::Code::bad_value, std::string("scene spec: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace confield
