#pragma once

// Lifting of 2D image votes to pseudo 3D votes.
//
// A surface point P and an object center C project to pixels p and c. The 2D
// vote c - p, scaled by P's depth over the focal length, gives a planar
// offset whose end point C' lies on the camera ray through C. The ray
// direction of OC' is passed along so a downstream model can recover the
// depth difference between P and C.

#include <array>
#include <cmath>

#include "imvote/geometry.hpp"

namespace imvote {

// Points closer than this to the camera plane are rejected.
inline constexpr double kMinDepth = 1e-6;

struct Vote2D {
  double du = 0.0;
  double dv = 0.0;
};

// Planar pseudo vote; its third component is zero by construction.
struct PseudoVote3D {
  double dx = 0.0;
  double dy = 0.0;

  Vec3 as_vec3() const { return {dx, dy, 0.0}; }
};

struct GeomCue {
  static constexpr int kDims = 5;

  PseudoVote3D pseudo_vote;
  Vec3 ray_dir;

  std::array<double, kDims> values() const {
    return {pseudo_vote.dx, pseudo_vote.dy, ray_dir.x, ray_dir.y, ray_dir.z};
  }
};

inline Vote2D vote_2d(const Pixel& p, const Pixel& box_center) {
  return {box_center.u - p.u, box_center.v - p.v};
}

inline PseudoVote3D pseudo_vote(const Vote2D& v, double z1, const CameraIntrinsics& k) {
  if (!(z1 > kMinDepth)) throw NonPositiveDepth();
  return {v.du * z1 / k.f, v.dv * z1 / k.f};
}

// Unit direction of OC' = OP + PC'.
inline Vec3 ray_cue(const Point3& p, const PseudoVote3D& pv) {
  if (!(p.z > kMinDepth)) throw NonPositiveDepth();
  const Vec3 oc = p + pv.as_vec3();
  const double n = oc.norm();
  if (!(n > 0.0)) throw DegenerateRay();
  return oc / n;
}

// X error of the pseudo vote relative to the true vote for a center C seen
// from a point at depth z1.
inline double depth_error(const Point3& c, double z1) {
  return (c.x / c.z) * (c.z - z1);
}

inline double depth_error_y(const Point3& c, double z1) {
  return (c.y / c.z) * (c.z - z1);
}

// Camera-frame geometric cue for a point P_cam whose pixel votes `v`.
inline GeomCue lift_camera(const Point3& p_cam, const Vote2D& v, const CameraIntrinsics& k) {
  GeomCue cue;
  cue.pseudo_vote = pseudo_vote(v, p_cam.z, k);
  cue.ray_dir = ray_cue(p_cam, cue.pseudo_vote);
  return cue;
}

struct UprightLift {
  GeomCue cue;     // pseudo vote PC'' (planar in the upright frame) + upright ray direction
  Point3 p;        // P in the upright frame
  Point3 c_prime;  // C' in the upright frame
  Point3 c_dprime; // C'' in the upright frame
};

// Re-expresses a camera-frame cue in the upright frame. C'' is the point on
// the line OC' at P's upright height, so PC'' has a zero upright z-component.
inline UprightLift lift_to_upright_full(const Point3& p_cam, const GeomCue& cue,
                                        const CameraExtrinsics& e) {
  const Point3 c_prime_cam = p_cam + cue.pseudo_vote.as_vec3();
  UprightLift out;
  out.p = e.camera_to_upright(p_cam);
  out.c_prime = e.camera_to_upright(c_prime_cam);
  if (out.c_prime.z == 0.0) throw DegenerateRay("C' lies in the upright horizontal plane");
  const double s = out.p.z / out.c_prime.z;
  out.c_dprime = {s * out.c_prime.x, s * out.c_prime.y, out.p.z};
  const Vec3 pc = out.c_dprime - out.p;
  out.cue.pseudo_vote = {pc.x, pc.y};
  const double n = out.c_prime.norm();
  if (!(n > 0.0)) throw DegenerateRay();
  out.cue.ray_dir = out.c_prime / n;
  return out;
}

inline GeomCue lift_to_upright(const Point3& p_cam, const GeomCue& cue, const CameraExtrinsics& e) {
  return lift_to_upright_full(p_cam, cue, e).cue;
}

}  // namespace imvote
