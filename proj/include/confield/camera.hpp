// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>

#include "confield/errors.hpp"
#include "confield/geometry.hpp"

namespace confield {

/// Shared pinhole intrinsics. Convention: x right, y down, z forward (camera
/// looks along +z), pixel centers at (u+0.5, v+0.5).
struct CameraIntrinsics {
  int width = 0;
  int height = 0;
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;

  void validate() const {
    if (width < 1 || height < 1) throw ContractError("image dimensions must be >= 1");
    if (fx <= 0 || fy <= 0) throw ContractError("focal lengths must be positive");
  }
};

/// Intrinsics plus a camera-to-world rigid pose.
struct CameraModel {
  CameraIntrinsics intr;
  Mat4 pose;  // camera-to-world, row-major

  void validate() const {
    intr.validate();
    pose.validate_rigid();
  }
};

struct Ray {
  Vec3 origin;
  Vec3 dir;  // unit
  double t_near = 0;
  double t_far = 0;
};

/// Casts the ray through pixel (u,v). Real-valued coordinates are accepted as
/// long as the pixel center u+0.5 lands inside [0, width] (same for v); the
/// integer pixel grid 0 <= u < width always satisfies this.
inline Ray generate_ray(const CameraModel& cam, double u, double v, double t_near,
                        double t_far) {
  if (u + 0.5 < 0.0 || u + 0.5 > cam.intr.width || v + 0.5 < 0.0 || v + 0.5 > cam.intr.height)
    throw ContractError("pixel (" + std::to_string(u) + "," + std::to_string(v) +
                        ") outside image bounds");
  if (!(t_near >= 0.0) || !(t_near < t_far))
    throw ContractError("require 0 <= t_near < t_far");
  const Vec3 dir_cam{(u + 0.5 - cam.intr.cx) / cam.intr.fx,
                     (v + 0.5 - cam.intr.cy) / cam.intr.fy, 1.0};
  Ray ray;
  ray.origin = cam.pose.translation();
  ray.dir = cam.pose.rotate(dir_cam).normalized();
  ray.t_near = t_near;
  ray.t_far = t_far;
  return ray;
}

/// Camera-to-world pose at `position` looking toward `target`, world up
/// `up` (y_cam points down so that image v grows downward).
inline Mat4 look_at_pose(const Vec3& position, const Vec3& target, const Vec3& up = {0, 0, 1}) {
  const Vec3 forward = (target - position).normalized();
  Vec3 right = forward.cross(up);
  const double rn = right.norm();
  if (rn < 1e-9) throw ContractError("look_at_pose: view direction parallel to up");
  right = right / rn;
  const Vec3 down = forward.cross(right);  // completes right-handed (x,y,z)=(right,down,forward)
  Mat4 p;
  for (int r = 0; r < 3; ++r) {
    p.at(r, 0) = right[static_cast<std::size_t>(r)];
    p.at(r, 1) = down[static_cast<std::size_t>(r)];
    p.at(r, 2) = forward[static_cast<std::size_t>(r)];
    p.at(r, 3) = position[static_cast<std::size_t>(r)];
  }
  return p;
}

/// Focal length in pixels from a horizontal field-of-view angle (radians).
inline double focal_from_fov_x(double camera_angle_x, int width) {
  return 0.5 * width / std::tan(0.5 * camera_angle_x);
}

}  // namespace confield
