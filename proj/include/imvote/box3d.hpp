#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "imvote/geometry.hpp"

namespace imvote {

// Oriented box in the upright frame. `size.x` runs along the heading
// direction, `size.y` across it and `size.z` vertically; heading is the yaw
// about +Z.
struct Box3 {
  Vec3 center;
  Vec3 size{1.0, 1.0, 1.0};
  double heading = 0.0;

  Vec3 axis_x() const { return {std::cos(heading), std::sin(heading), 0.0}; }
  Vec3 axis_y() const { return {-std::sin(heading), std::cos(heading), 0.0}; }

  Vec3 to_local(const Vec3& p) const {
    const Vec3 d = p - center;
    return {d.dot(axis_x()), d.dot(axis_y()), d.z};
  }
  Vec3 to_world(const Vec3& local) const {
    return center + axis_x() * local.x + axis_y() * local.y + Vec3{0, 0, local.z};
  }

  bool contains(const Vec3& p, double inflate = 0.0) const {
    const Vec3 l = to_local(p);
    return std::abs(l.x) <= 0.5 * size.x + inflate && std::abs(l.y) <= 0.5 * size.y + inflate &&
           std::abs(l.z) <= 0.5 * size.z + inflate;
  }

  // Counter-clockwise footprint corners (x, y).
  std::array<std::array<double, 2>, 4> footprint() const {
    const double hx = 0.5 * size.x;
    const double hy = 0.5 * size.y;
    const std::array<std::array<double, 2>, 4> local{{{hx, hy}, {-hx, hy}, {-hx, -hy}, {hx, -hy}}};
    std::array<std::array<double, 2>, 4> out{};
    const double c = std::cos(heading);
    const double s = std::sin(heading);
    for (int i = 0; i < 4; ++i) {
      out[i] = {center.x + c * local[i][0] - s * local[i][1],
                center.y + s * local[i][0] + c * local[i][1]};
    }
    return out;
  }

  std::array<Vec3, 8> corners() const {
    std::array<Vec3, 8> out{};
    int k = 0;
    for (int sx : {-1, 1})
      for (int sy : {-1, 1})
        for (int sz : {-1, 1})
          out[k++] = to_world({0.5 * sx * size.x, 0.5 * sy * size.y, 0.5 * sz * size.z});
    return out;
  }

  double volume() const { return size.x * size.y * size.z; }
};

// Wraps an angle into [-pi, pi).
inline double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a < 0.0) a += two_pi;
  return a - std::numbers::pi;
}

}  // namespace imvote
