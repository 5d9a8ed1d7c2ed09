// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "confield/camera.hpp"
#include "confield/errors.hpp"
#include "confield/geometry.hpp"
#include "confield/image.hpp"

namespace confield {

struct PosedFrame {
  std::string id;
  Mat4 pose;  // camera-to-world
  Image image;
};

/// Posed RGB dataset with shared intrinsics plus the scene metadata needed to
/// cast and bound rays.
struct PosedDataset {
  CameraIntrinsics intrinsics;
  std::vector<PosedFrame> frames;
  Aabb bounds;
  double t_near = 0.5;
  double t_far = 4.5;
  Vec3 background{0, 0, 0};

  CameraModel camera(std::size_t i) const { return {intrinsics, frames[i].pose}; }

  void validate() const {
    intrinsics.validate();
    if (!(t_near >= 0.0) || !(t_near < t_far)) throw ContractError("require 0 <= t_near < t_far");
    for (const PosedFrame& f : frames) {
      f.pose.validate_rigid();
      if (f.image.width != intrinsics.width || f.image.height != intrinsics.height)
        throw ContractError("frame " + f.id + " resolution differs from intrinsics");
    }
  }

  /// Raw size of all images as float32 tensors; the centralized-transfer
  /// baseline in communication reports.
  std::uint64_t raw_tensor_bytes() const {
    return static_cast<std::uint64_t>(frames.size()) * intrinsics.width * intrinsics.height * 3 * 4;
  }
};

enum class PartitionStrategy { round_robin, contiguous };

inline PartitionStrategy partition_strategy_from_string(const std::string& s) {
  if (s == "round_robin") return PartitionStrategy::round_robin;
  if (s == "contiguous") return PartitionStrategy::contiguous;
  throw ParseError(ParseError::Code::bad_value, "unknown partition strategy: " + s);
}

/// Splits frames into disjoint shards whose union is the input; shard sizes
/// differ by at most one, remainder spread one-per-agent from agent 0. The
/// seed is reserved for randomized strategies; both named strategies are
/// deterministic.
inline std::vector<PosedDataset> partition_dataset(const PosedDataset& ds, int n_agents,
                                                   PartitionStrategy strategy,
                                                   std::uint64_t /*seed*/ = 0) {
  if (n_agents < 1) throw ContractError("partition_dataset: n_agents must be >= 1");
  if (static_cast<std::size_t>(n_agents) > ds.frames.size())
    throw ContractError("partition_dataset: " + std::to_string(n_agents) +
                        " agents but only " + std::to_string(ds.frames.size()) +
                        " frames; an agent would hold no data");
  std::vector<PosedDataset> shards(static_cast<std::size_t>(n_agents));
  for (auto& s : shards) {
    s.intrinsics = ds.intrinsics;
    s.bounds = ds.bounds;
    s.t_near = ds.t_near;
    s.t_far = ds.t_far;
    s.background = ds.background;
  }
  const std::size_t n = ds.frames.size();
  if (strategy == PartitionStrategy::round_robin) {
    for (std::size_t i = 0; i < n; ++i)
      shards[i % static_cast<std::size_t>(n_agents)].frames.push_back(ds.frames[i]);
  } else {
    const std::size_t base = n / static_cast<std::size_t>(n_agents);
    const std::size_t rem = n % static_cast<std::size_t>(n_agents);
    std::size_t at = 0;
    for (std::size_t a = 0; a < static_cast<std::size_t>(n_agents); ++a) {
      const std::size_t take = base + (a < rem ? 1 : 0);
      for (std::size_t i = 0; i < take; ++i) shards[a].frames.push_back(ds.frames[at++]);
    }
  }
  return shards;
}

// ---------------------------------------------------------------------------
// meta.json + PPM directory format

namespace detail {

inline nlohmann::json pose_to_json(const Mat4& p) {
  nlohmann::json arr = nlohmann::json::array();
  for (double v : p.m) arr.push_back(v);
  return arr;
}

inline Mat4 pose_from_json(const nlohmann::json& arr) {
  if (!arr.is_array() || arr.size() != 16)
    throw ParseError(ParseError::Code::bad_value, "pose must be a 16-element row-major array");
  Mat4 p;
  for (std::size_t i = 0; i < 16; ++i) p.m[i] = arr[i].get<double>();
  return p;
}

inline nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(ParseError::Code::io, "cannot open: " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseError::Code::bad_value,
                     "malformed JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace detail

/// Writes `meta.json` plus one PPM per frame into `dir`.
inline void save_dataset(const PosedDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json meta;
  meta["width"] = ds.intrinsics.width;
  meta["height"] = ds.intrinsics.height;
  meta["fx"] = ds.intrinsics.fx;
  meta["fy"] = ds.intrinsics.fy;
  meta["cx"] = ds.intrinsics.cx;
  meta["cy"] = ds.intrinsics.cy;
  meta["t_near"] = ds.t_near;
  meta["t_far"] = ds.t_far;
  meta["background"] = {ds.background.x, ds.background.y, ds.background.z};
  meta["bounds"] = {{"lo", {ds.bounds.lo.x, ds.bounds.lo.y, ds.bounds.lo.z}},
                    {"hi", {ds.bounds.hi.x, ds.bounds.hi.y, ds.bounds.hi.z}}};
  nlohmann::json frames = nlohmann::json::array();
  for (const PosedFrame& f : ds.frames) {
    const std::string file = f.id + ".ppm";
    frames.push_back({{"id", f.id}, {"pose", detail::pose_to_json(f.pose)}, {"image", file}});
    write_ppm(f.image, dir / file);
  }
  meta["frames"] = std::move(frames);
  std::ofstream out(dir / "meta.json");
  if (!out)
    throw ParseError(ParseError::Code::io, "cannot write " + (dir / "meta.json").string());
  out << meta.dump(2) << "\n";
}

inline PosedDataset load_dataset(const std::filesystem::path& dir) {
  const nlohmann::json meta = detail::load_json_file(dir / "meta.json");
  PosedDataset ds;
  try {
    ds.intrinsics.width = meta.at("width").get<int>();
    ds.intrinsics.height = meta.at("height").get<int>();
    ds.intrinsics.fx = meta.at("fx").get<double>();
    ds.intrinsics.fy = meta.at("fy").get<double>();
    ds.intrinsics.cx = meta.at("cx").get<double>();
    ds.intrinsics.cy = meta.at("cy").get<double>();
    ds.t_near = meta.at("t_near").get<double>();
    ds.t_far = meta.at("t_far").get<double>();
    const auto& bg = meta.at("background");
    ds.background = {bg.at(0).get<double>(), bg.at(1).get<double>(), bg.at(2).get<double>()};
    const auto& bounds = meta.at("bounds");
    const auto& lo = bounds.at("lo");
    const auto& hi = bounds.at("hi");
    ds.bounds.lo = {lo.at(0).get<double>(), lo.at(1).get<double>(), lo.at(2).get<double>()};
    ds.bounds.hi = {hi.at(0).get<double>(), hi.at(1).get<double>(), hi.at(2).get<double>()};
    for (const auto& fj : meta.at("frames")) {
      PosedFrame f;
      f.id = fj.at("id").get<std::string>();
      f.pose = detail::pose_from_json(fj.at("pose"));
      f.image = read_image(dir / fj.at("image").get<std::string>());
      ds.frames.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseError::Code::bad_value,
                     "meta.json in " + dir.string() + ": " + e.what());
  }
  ds.validate();
  return ds;
}

// ---------------------------------------------------------------------------
// Blender transforms reader

/// Loads a Blender-convention `transforms_*.json` dataset. `path` may be the
/// JSON file itself or a directory containing `transforms_train.json`. Poses
/// are converted from the OpenGL-style camera axes (look -z, y up) used by
/// those files to this library's pinhole convention (look +z, y down) so the
/// loaded cameras render directly. Referenced images resolve relative to the
/// JSON's directory, trying the path as written, then `.ppm`, then `.png`.
inline PosedDataset load_blender_transforms(const std::filesystem::path& path) {
  std::filesystem::path json_path = path;
  if (std::filesystem::is_directory(path)) json_path = path / "transforms_train.json";
  if (!std::filesystem::exists(json_path))
    throw ParseError(ParseError::Code::io, "no such file: " + json_path.string());
  const nlohmann::json meta = detail::load_json_file(json_path);
  const std::filesystem::path base = json_path.parent_path();

  PosedDataset ds;
  // Blender synthetic scenes sit near the origin with cameras ~4 units out.
  ds.bounds = Aabb{{-4, -4, -4}, {4, 4, 4}};
  ds.t_near = 2.0;
  ds.t_far = 6.0;
  ds.background = {1, 1, 1};

  double camera_angle_x = 0;
  try {
    camera_angle_x = meta.at("camera_angle_x").get<double>();
    int index = 0;
    for (const auto& fj : meta.at("frames")) {
      PosedFrame f;
      const std::string rel = fj.at("file_path").get<std::string>();
      f.id = "frame_" + std::to_string(index++);
      std::filesystem::path img;
      for (const std::string& candidate : {rel, rel + ".ppm", rel + ".png"}) {
        const auto p = base / candidate;
        if (std::filesystem::exists(p)) {
          img = p;
          break;
        }
      }
      if (img.empty())
        throw ParseError(ParseError::Code::io, "missing image for frame " + rel);
      f.image = read_image(img);

      const auto& tm = fj.at("transform_matrix");
      Mat4 gl;
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) gl.at(r, c) = tm.at(r).at(c).get<double>();
      // Flip camera y and z axes: OpenGL-style to x-right/y-down/z-forward.
      Mat4 p = gl;
      for (int r = 0; r < 3; ++r) {
        p.at(r, 1) = -gl.at(r, 1);
        p.at(r, 2) = -gl.at(r, 2);
      }
      f.pose = p;
      ds.frames.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseError::Code::bad_value,
                     json_path.string() + ": " + e.what());
  }
  if (ds.frames.empty())
    throw ParseError(ParseError::Code::bad_value, "transforms file has no frames");

  ds.intrinsics.width = ds.frames.front().image.width;
  ds.intrinsics.height = ds.frames.front().image.height;
  ds.intrinsics.fx = focal_from_fov_x(camera_angle_x, ds.intrinsics.width);
  ds.intrinsics.fy = ds.intrinsics.fx;
  ds.intrinsics.cx = 0.5 * ds.intrinsics.width;
  ds.intrinsics.cy = 0.5 * ds.intrinsics.height;
  ds.validate();
  return ds;
}

}  // namespace confield
