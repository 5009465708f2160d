#pragma once

// Pinhole camera geometry.
//
// Camera frame: +Z forward, +X right, +Y down.
// Upright frame: gravity aligned with +Z up. The camera center is the origin
// of both frames; the extrinsic rotation R maps camera coordinates to upright
// coordinates (p_upright = R * p_camera).

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "imvote/errors.hpp"

namespace imvote {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr bool operator==(const Vec3&) const = default;

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

  Eigen::Vector3d eigen() const { return {x, y, z}; }
  static Vec3 from(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

using Point3 = Vec3;

struct Pixel {
  double u = 0.0;
  double v = 0.0;
  constexpr bool operator==(const Pixel&) const = default;
};

struct CameraIntrinsics {
  double f = 1.0;
  double cu = 0.0;
  double cv = 0.0;

  CameraIntrinsics() = default;
  CameraIntrinsics(double focal, double principal_u, double principal_v)
      : f(focal), cu(principal_u), cv(principal_v) {
    if (!(f > 0.0) || !std::isfinite(f)) throw ConfigError("focal length must be positive");
  }
};

class CameraExtrinsics {
 public:
  static constexpr double kTolerance = 1e-9;

  CameraExtrinsics() : rotation_(Eigen::Matrix3d::Identity()) {}
  explicit CameraExtrinsics(const Eigen::Matrix3d& r) : rotation_(r) {
    const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (!(ortho <= kTolerance) || std::abs(r.determinant() - 1.0) > kTolerance) {
      throw InvalidRotation();
    }
  }

  const Eigen::Matrix3d& rotation() const { return rotation_; }

  Vec3 camera_to_upright(const Vec3& p) const { return Vec3::from(rotation_ * p.eigen()); }
  Vec3 upright_to_camera(const Vec3& p) const {
    return Vec3::from(rotation_.transpose() * p.eigen());
  }

 private:
  Eigen::Matrix3d rotation_;
};

struct CameraRig {
  CameraIntrinsics intrinsics;
  CameraExtrinsics extrinsics;
};

// Unit-direction ray. Construction normalizes the direction.
class Ray3 {
 public:
  Ray3(const Point3& origin, const Vec3& direction) : origin_(origin) {
    const double n = direction.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw DegenerateRay();
    direction_ = direction / n;
  }
  const Point3& origin() const { return origin_; }
  const Vec3& direction() const { return direction_; }

 private:
  Point3 origin_;
  Vec3 direction_;
};

inline Pixel project(const Point3& p, const CameraIntrinsics& k) {
  if (!(p.z > 0.0)) throw NonPositiveDepth();
  return {k.f * p.x / p.z + k.cu, k.f * p.y / p.z + k.cv};
}

inline Point3 unproject(const Pixel& px, double depth, const CameraIntrinsics& k) {
  if (!(depth > 0.0)) throw NonPositiveDepth();
  return {(px.u - k.cu) * depth / k.f, (px.v - k.cv) * depth / k.f, depth};
}

inline Point3 to_upright(const Point3& p, const CameraExtrinsics& e) {
  return e.camera_to_upright(p);
}

// True iff some t >= 0 puts origin + t * direction within tol of q.
inline bool point_on_ray(const Point3& q, const Ray3& r, double tol) {
  const double t = std::max(0.0, (q - r.origin()).dot(r.direction()));
  return (r.origin() + r.direction() * t - q).norm() <= tol;
}

// Rotation about an arbitrary unit axis (Rodrigues).
inline Eigen::Matrix3d axis_angle(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.eigen().normalized()).toRotationMatrix();
}

// Camera looking horizontally along upright +Y, then tilted down by `pitch`
// radians and rolled by `roll` radians about its optical axis.
inline CameraExtrinsics level_camera(double pitch, double roll = 0.0) {
  Eigen::Matrix3d base;
  // columns: images of camera +X (right), +Y (down), +Z (forward)
  base << 1, 0, 0,
          0, 0, 1,
          0, -1, 0;
  const Eigen::Matrix3d tilt = Eigen::AngleAxisd(-pitch, Eigen::Vector3d::UnitX()).toRotationMatrix();
  const Eigen::Matrix3d spin = Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  return CameraExtrinsics(tilt * base * spin);
}

}  // namespace imvote
