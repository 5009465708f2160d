#pragma once

// Randomized property run over the vote-lifting identities. Used by the
// `lift-check` CLI verb; each property reports its worst deviation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "imvote/geometry.hpp"
#include "imvote/vote_lift.hpp"

namespace imvote {

struct LiftProperty {
  std::string name;
  double worst = 0.0;  // largest observed deviation
  double tol = 0.0;
  bool passed() const { return worst <= tol; }
};

struct LiftCheckReport {
  int scenes = 0;
  std::vector<LiftProperty> properties;
  bool passed() const {
    return std::all_of(properties.begin(), properties.end(), [](const auto& p) { return p.passed(); });
  }
};

// Distance from q to the half-line from the origin along `dir`.
inline double distance_to_ray(const Vec3& q, const Vec3& dir) {
  const Vec3 d = dir / dir.norm();
  const double t = std::max(0.0, q.dot(d));
  return (q - d * t).norm();
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline LiftCheckReport run_lift_check(int scenes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };

  LiftProperty on_ray{"C' on ray OC", 0.0, 1e-9};
  LiftProperty planar{"pseudo vote z == 0", 0.0, 0.0};
  LiftProperty equal_depth{"equal depth: pseudo == true vote", 0.0, 1e-12};
  LiftProperty err_x{"x error identity", 0.0, 1e-9};
  LiftProperty err_y{"y error identity", 0.0, 1e-9};
  LiftProperty upright_ray{"C'' on upright ray OC'", 0.0, 1e-9};
  LiftProperty upright_flat{"PC'' . z_up == 0", 0.0, 1e-12};

  for (int i = 0; i < scenes; ++i) {
    const CameraIntrinsics k(uniform(100, 1000), uniform(-400, 400), uniform(-300, 300));
    auto random_point = [&] {
      const double z = uniform(0.5, 10.0);
      return Point3{uniform(-0.7, 0.7) * z, uniform(-0.7, 0.7) * z, z};
    };
    const Point3 p = random_point();
    const Point3 c = random_point();
    const GeomCue cue = lift_camera(p, vote_2d(project(p, k), project(c, k)), k);
    const Vec3 c_prime = p + cue.pseudo_vote.as_vec3();
    const double scale = std::max(1.0, c_prime.norm());

    on_ray.worst = std::max(on_ray.worst, distance_to_ray(c_prime, c) / scale);
    planar.worst = std::max(planar.worst, std::abs(cue.pseudo_vote.as_vec3().z));

    const Vec3 true_vote = c - p;
    err_x.worst = std::max(err_x.worst, std::abs(true_vote.x - cue.pseudo_vote.dx - depth_error(c, p.z)) /
                                            std::max(1.0, std::abs(true_vote.x)));
    err_y.worst = std::max(err_y.worst, std::abs(true_vote.y - cue.pseudo_vote.dy - depth_error_y(c, p.z)) /
                                            std::max(1.0, std::abs(true_vote.y)));

    // a point at the center's depth
    const Point3 q{uniform(-0.7, 0.7) * c.z, uniform(-0.7, 0.7) * c.z, c.z};
    const PseudoVote3D pq = pseudo_vote(vote_2d(project(q, k), project(c, k)), q.z, k);
    const Vec3 tq = c - q;
    equal_depth.worst =
        std::max({equal_depth.worst, std::abs(pq.dx - tq.x) / std::max(1.0, std::abs(tq.x)),
                  std::abs(pq.dy - tq.y) / std::max(1.0, std::abs(tq.y))});

    // C'' sits on the ray (not just the line) only when P and C' are on the
    // same side of the camera's horizontal plane, as in any real scene.
    CameraExtrinsics e;
    do {
      e = CameraExtrinsics(random_rotation(rng));
    } while (!(e.camera_to_upright(p).z * e.camera_to_upright(c_prime).z > 0.0));
    const UprightLift up = lift_to_upright_full(p, cue, e);
    upright_ray.worst = std::max(upright_ray.worst,
                                 distance_to_ray(up.c_dprime, up.cue.ray_dir) / std::max(1.0, up.c_dprime.norm()));
    upright_flat.worst = std::max(upright_flat.worst, std::abs((up.c_dprime - up.p).z));
  }
  return {scenes, {on_ray, planar, equal_depth, err_x, err_y, upright_ray, upright_flat}};
}

}  // namespace imvote
