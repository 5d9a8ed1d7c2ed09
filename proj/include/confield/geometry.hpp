// Copyright 2026 The confield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "confield/errors.hpp"

namespace confield {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3() = default;
  Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  double& operator[](std::size_t i) { return (&x)[i]; }
  double operator[](std::size_t i) const { return (&x)[i]; }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const { return *this / norm(); }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }

  bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// 4x4 rigid transform, row-major. Used as a camera-to-world pose.
struct Mat4 {
  std::array<double, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

  double& at(int r, int c) { return m[static_cast<std::size_t>(r * 4 + c)]; }
  double at(int r, int c) const { return m[static_cast<std::size_t>(r * 4 + c)]; }

  static Mat4 identity() { return Mat4{}; }

  Vec3 translation() const { return {at(0, 3), at(1, 3), at(2, 3)}; }

  /// Applies only the rotation block.
  Vec3 rotate(const Vec3& v) const {
    return {at(0, 0) * v.x + at(0, 1) * v.y + at(0, 2) * v.z,
            at(1, 0) * v.x + at(1, 1) * v.y + at(1, 2) * v.z,
            at(2, 0) * v.x + at(2, 1) * v.y + at(2, 2) * v.z};
  }

  Vec3 transform_point(const Vec3& p) const { return rotate(p) + translation(); }

  /// Column i of the rotation block.
  Vec3 rotation_col(int i) const { return {at(0, i), at(1, i), at(2, i)}; }

  double rotation_det() const {
    const Vec3 c0 = rotation_col(0), c1 = rotation_col(1), c2 = rotation_col(2);
    return c0.dot(c1.cross(c2));
  }

  /// Throws unless the rotation block is orthonormal (within tol) with det +1
  /// and the bottom row is (0,0,0,1).
  void validate_rigid(double tol = 1e-6) const {
    for (int i = 0; i < 3; ++i) {
      for (int j = i; j < 3; ++j) {
        const double d = rotation_col(i).dot(rotation_col(j));
        const double want = (i == j) ? 1.0 : 0.0;
        if (std::abs(d - want) > tol)
          throw ContractError("pose rotation block is not orthonormal");
      }
    }
    if (std::abs(rotation_det() - 1.0) > tol)
      throw ContractError("pose rotation determinant is not +1");
    if (at(3, 0) != 0.0 || at(3, 1) != 0.0 || at(3, 2) != 0.0 || at(3, 3) != 1.0)
      throw ContractError("pose bottom row must be (0,0,0,1)");
  }
};

/// Axis-aligned box.
struct Aabb {
  Vec3 lo{-1, -1, -1};
  Vec3 hi{1, 1, 1};

  bool contains(const Vec3& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z &&
           p.z <= hi.z;
  }

  Vec3 center() const { return (lo + hi) * 0.5; }
  Vec3 half_extent() const { return (hi - lo) * 0.5; }

  /// Affine map of the box onto [-1,1]^3 (per axis).
  Vec3 normalize(const Vec3& p) const {
    const Vec3 c = center(), h = half_extent();
    return {(p.x - c.x) / h.x, (p.y - c.y) / h.y, (p.z - c.z) / h.z};
  }
};

}  // namespace confield
