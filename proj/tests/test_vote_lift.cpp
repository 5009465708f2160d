#include <gtest/gtest.h>

#include <random>

#include "imvote/lift_check.hpp"
#include "imvote/vote_lift.hpp"

using namespace imvote;

namespace {

struct RandomScene {
  CameraIntrinsics k;
  Point3 p, c;
};

RandomScene random_scene(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  auto pt = [&] {
    const double z = 0.5 + 9.5 * u(rng);
    return Point3{(u(rng) - 0.5) * 1.4 * z, (u(rng) - 0.5) * 1.4 * z, z};
  };
  return {CameraIntrinsics(100 + 900 * u(rng), 800 * (u(rng) - 0.5), 600 * (u(rng) - 0.5)), pt(), pt()};
}

// Closed form pseudo vote: (f(x2/z2 - x1/z1) z1 / f, ...) = (x2 z1/z2 - x1, y2 z1/z2 - y1)
Vec3 oracle_pseudo(const Point3& p, const Point3& c) {
  return {c.x * p.z / c.z - p.x, c.y * p.z / c.z - p.y, 0.0};
}

double ray_distance(const Vec3& q, const Vec3& dir) {
  const Vec3 d = dir / dir.norm();
  const double t = std::max(0.0, q.dot(d));
  return (q - d * t).norm();
}

}  // namespace

TEST(Vote2D, Examples) {
  const Vote2D a = vote_2d({4, 5}, {4, 5});
  EXPECT_EQ(a.du, 0.0);
  EXPECT_EQ(a.dv, 0.0);
  const Vote2D b = vote_2d({10, 20}, {60, -5});
  EXPECT_EQ(b.du, 50.0);
  EXPECT_EQ(b.dv, -25.0);
}

TEST(Vote2D, MatchesProjectionClosedForm) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto s = random_scene(rng);
    const Vote2D v = vote_2d(project(s.p, s.k), project(s.c, s.k));
    EXPECT_NEAR(v.du, s.k.f * (s.c.x / s.c.z - s.p.x / s.p.z), 1e-9 * std::max(1.0, std::abs(v.du)));
    EXPECT_NEAR(v.dv, s.k.f * (s.c.y / s.c.z - s.p.y / s.p.z), 1e-9 * std::max(1.0, std::abs(v.dv)));
  }
}

TEST(PseudoVote, Examples) {
  const CameraIntrinsics k(100, 0, 0);
  const PseudoVote3D z = pseudo_vote({0, 0}, 3.0, k);
  EXPECT_EQ(z.dx, 0.0);
  EXPECT_EQ(z.dy, 0.0);
  const PseudoVote3D v = pseudo_vote({50, -25}, 2.0, k);
  EXPECT_DOUBLE_EQ(v.dx, 1.0);
  EXPECT_DOUBLE_EQ(v.dy, -0.5);
  EXPECT_EQ(v.as_vec3().z, 0.0);
  EXPECT_THROW(pseudo_vote({1, 1}, 0.0, k), NonPositiveDepth);
  EXPECT_THROW(pseudo_vote({1, 1}, 1e-7, k), NonPositiveDepth);
}

TEST(PseudoVote, EqualDepthGivesTrueVote) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    auto s = random_scene(rng);
    s.p.z = s.c.z;
    const PseudoVote3D pv = pseudo_vote(vote_2d(project(s.p, s.k), project(s.c, s.k)), s.p.z, s.k);
    const Vec3 t = s.c - s.p;
    EXPECT_NEAR(pv.dx, t.x, 1e-12 * std::max(1.0, std::abs(t.x)));
    EXPECT_NEAR(pv.dy, t.y, 1e-12 * std::max(1.0, std::abs(t.y)));
  }
}

TEST(PseudoVote, MatchesClosedFormAndErrorIdentity) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10000; ++i) {
    const auto s = random_scene(rng);
    const PseudoVote3D pv = pseudo_vote(vote_2d(project(s.p, s.k), project(s.c, s.k)), s.p.z, s.k);
    const Vec3 o = oracle_pseudo(s.p, s.c);
    EXPECT_NEAR(pv.dx, o.x, 1e-9 * std::max(1.0, std::abs(o.x)));
    const Vec3 t = s.c - s.p;
    const double ex = (s.c.x / s.c.z) * (s.c.z - s.p.z);
    const double ey = (s.c.y / s.c.z) * (s.c.z - s.p.z);
    EXPECT_NEAR(t.x - pv.dx, ex, 1e-9 * std::max(1.0, std::abs(t.x)));
    EXPECT_NEAR(t.y - pv.dy, ey, 1e-9 * std::max(1.0, std::abs(t.y)));
    EXPECT_NEAR(depth_error(s.c, s.p.z), ex, 1e-12 * std::max(1.0, std::abs(ex)));
  }
}

TEST(DepthError, Examples) {
  EXPECT_EQ(depth_error({1, 2, 3}, 3.0), 0.0);
  EXPECT_DOUBLE_EQ(depth_error({1, 0, 2}, 1.0), 0.5);
}

TEST(RayCue, Examples) {
  const Vec3 a = ray_cue({0, 0, 1}, {0, 0});
  EXPECT_EQ(a, (Vec3{0, 0, 1}));
  // pseudo vote for P = (1,2,2) toward C = (0,1,3) lands on the ray OC
  const CameraIntrinsics k(100, 0, 0);
  const Point3 p{1, 2, 2}, c{0, 1, 3};
  const PseudoVote3D pv = pseudo_vote(vote_2d(project(p, k), project(c, k)), p.z, k);
  EXPECT_TRUE(point_on_ray(c, Ray3({0, 0, 0}, ray_cue(p, pv)), 1e-9));
  EXPECT_THROW(ray_cue({0, 0, 0}, {0, 0}), NonPositiveDepth);
}

TEST(RayCue, UnitNormAndCollinearWithTrueCenter) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    const auto s = random_scene(rng);
    const GeomCue cue = lift_camera(s.p, vote_2d(project(s.p, s.k), project(s.c, s.k)), s.k);
    EXPECT_NEAR(cue.ray_dir.norm(), 1.0, 1e-12);
    EXPECT_LE(ray_distance(s.c, cue.ray_dir), 1e-9 * s.c.norm());
    // C' itself lies on OC
    EXPECT_LE(ray_distance(s.p + cue.pseudo_vote.as_vec3(), s.c), 1e-9 * std::max(1.0, s.c.norm()));
  }
}

TEST(LiftToUpright, IdentityExtrinsicsKeepCameraLift) {
  const CameraIntrinsics k(120, 10, -5);
  const Point3 p{0.4, -0.3, 2.5}, c{-0.2, 0.1, 3.0};
  const GeomCue cam = lift_camera(p, vote_2d(project(p, k), project(c, k)), k);
  const GeomCue up = lift_to_upright(p, cam, CameraExtrinsics());
  // with R = I and equal height construction, C'' = C' (same z as P)
  EXPECT_NEAR(up.pseudo_vote.dx, cam.pseudo_vote.dx, 1e-12);
  EXPECT_NEAR(up.pseudo_vote.dy, cam.pseudo_vote.dy, 1e-12);
  EXPECT_NEAR((up.ray_dir - cam.ray_dir).norm(), 0.0, 1e-12);
  // lifting is idempotent under the identity
  const GeomCue again = lift_to_upright(p, up, CameraExtrinsics());
  EXPECT_NEAR(again.pseudo_vote.dx, up.pseudo_vote.dx, 1e-12);
  EXPECT_NEAR(again.pseudo_vote.dy, up.pseudo_vote.dy, 1e-12);
}

TEST(LiftToUpright, RayMembershipAndFlatVote) {
  std::mt19937_64 rng(5);
  int checked = 0;
  while (checked < 2000) {
    const auto s = random_scene(rng);
    const GeomCue cam = lift_camera(s.p, vote_2d(project(s.p, s.k), project(s.c, s.k)), s.k);
    const CameraExtrinsics e(random_rotation(rng));
    const Vec3 pu = e.camera_to_upright(s.p);
    const Vec3 cu = e.camera_to_upright(s.p + cam.pseudo_vote.as_vec3());
    if (!(pu.z * cu.z > 0.0)) continue;
    ++checked;
    const UprightLift up = lift_to_upright_full(s.p, cam, e);
    // C'' by the oracle construction: scale C' to P's upright height
    const Vec3 cdd = cu * (pu.z / cu.z);
    EXPECT_NEAR((up.c_dprime - cdd).norm(), 0.0, 1e-9 * std::max(1.0, cdd.norm()));
    EXPECT_LE(ray_distance(up.c_dprime, cu), 1e-9 * std::max(1.0, cdd.norm()));
    EXPECT_EQ((up.c_dprime - up.p).z, 0.0);
    EXPECT_NEAR(up.cue.ray_dir.norm(), 1.0, 1e-12);
    EXPECT_NEAR(up.cue.pseudo_vote.dx, cdd.x - pu.x, 1e-9 * std::max(1.0, cdd.norm()));
    // the true upright center lies on the same ray
    EXPECT_LE(ray_distance(e.camera_to_upright(s.c), up.cue.ray_dir), 1e-9 * s.c.norm());
  }
}

TEST(LiftToUpright, Equivariance) {
  // lifting with R2*R1 equals lifting with R1 and then rotating the result by R2
  // about the up axis (rotations about up preserve heights)
  std::mt19937_64 rng(6);
  for (int i = 0; i < 500; ++i) {
    const auto s = random_scene(rng);
    const GeomCue cam = lift_camera(s.p, vote_2d(project(s.p, s.k), project(s.c, s.k)), s.k);
    const Eigen::Matrix3d r1 = level_camera(0.4, 0.02).rotation();
    const Eigen::Matrix3d r2 = axis_angle({0, 0, 1}, 0.7 * i);
    const UprightLift a = lift_to_upright_full(s.p, cam, CameraExtrinsics(r1));
    const UprightLift b = lift_to_upright_full(s.p, cam, CameraExtrinsics(r2 * r1));
    const Vec3 rotated_vote = Vec3::from(r2 * a.cue.pseudo_vote.as_vec3().eigen());
    EXPECT_NEAR((rotated_vote - b.cue.pseudo_vote.as_vec3()).norm(), 0.0, 1e-9 * std::max(1.0, rotated_vote.norm()));
    EXPECT_NEAR((Vec3::from(r2 * a.cue.ray_dir.eigen()) - b.cue.ray_dir).norm(), 0.0, 1e-9);
  }
}

TEST(LiftToUpright, DegenerateWhenCPrimeIsLevel) {
  // C' at the camera's height in the upright frame
  const Point3 p{0, 0, 2};
  GeomCue cue;
  cue.pseudo_vote = {0, 0};
  cue.ray_dir = {0, 0, 1};
  EXPECT_THROW(lift_to_upright(p, cue, level_camera(0.0)), DegenerateRay);
}

TEST(GeomCue, FiveScalars) {
  EXPECT_EQ(GeomCue::kDims, 5);
  GeomCue c;
  EXPECT_EQ(c.values().size(), 5u);
}

TEST(LiftCheck, LibrarySuitePasses) {
  const LiftCheckReport r = run_lift_check(3000, 99);
  for (const auto& p : r.properties) EXPECT_TRUE(p.passed()) << p.name << " worst " << p.worst;
}
