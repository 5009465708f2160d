#include <gtest/gtest.h>

#include <random>

#include "imvote/image_cues.hpp"

using namespace imvote;

namespace {

Detection2D det(double u0, double v0, double u1, double v1, int cls, double score) {
  return {{u0, v0, u1, v1}, cls, score};
}

CameraRig test_rig() { return {CameraIntrinsics(100, 80, 60), level_camera(0.3)}; }

// seed whose camera-frame projection is (u, v) at depth z
SeedPoint seed_at(const CameraRig& rig, double u, double v, double z) {
  SeedPoint s;
  s.pos = rig.extrinsics.camera_to_upright(unproject({u, v}, z, rig.intrinsics));
  return s;
}

RgbImage gradient_image() {
  RgbImage img(160, 120);
  for (int v = 0; v < 120; ++v)
    for (int u = 0; u < 160; ++u)
      img.set(u, v, {static_cast<std::uint8_t>(u), static_cast<std::uint8_t>(2 * v), 77});
  return img;
}

}  // namespace

TEST(FilterDetections, Examples) {
  EXPECT_TRUE(filter_detections({}).empty());
  const auto out = filter_detections({det(0, 0, 1, 1, 0, 0.9), det(0, 0, 1, 1, 1, 0.05),
                                      det(0, 0, 1, 1, 2, 0.5)}, 100, 0.1);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].score, 0.9);
  EXPECT_EQ(out[1].score, 0.5);
}

TEST(FilterDetections, TopKAndStableTies) {
  std::vector<Detection2D> dets;
  for (int i = 0; i < 150; ++i) dets.push_back(det(0, 0, 1 + i, 1, i % 4, (i % 10) / 10.0 + 0.05));
  const auto out = filter_detections(dets, 100, 0.1);
  ASSERT_EQ(out.size(), 100u);
  for (std::size_t i = 1; i < out.size(); ++i) {
    EXPECT_GE(out[i - 1].score, out[i].score);
    EXPECT_GE(out[i].score, 0.1);
    if (out[i - 1].score == out[i].score) EXPECT_LE(out[i - 1].class_id, out[i].class_id);
  }
  // same input, same output
  const auto again = filter_detections(dets, 100, 0.1);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i].box.umax, again[i].box.umax);
  EXPECT_TRUE(filter_detections(dets, 0, 0.1).empty());
}

TEST(BoxesContaining, Examples) {
  const std::vector<Detection2D> dets{det(0, 0, 10, 10, 0, 0.5), det(5, 5, 20, 20, 0, 0.5),
                                      det(30, 30, 40, 40, 0, 0.5)};
  EXPECT_TRUE(boxes_containing({50, 50}, dets).empty());
  EXPECT_EQ(boxes_containing({7, 7}, dets), (std::vector<std::size_t>{0, 1}));
  // closed intervals
  EXPECT_EQ(boxes_containing({10, 3}, dets), (std::vector<std::size_t>{0}));
  EXPECT_EQ(boxes_containing({30, 40}, dets), (std::vector<std::size_t>{2}));
}

TEST(SemanticCue, Examples) {
  const Eigen::VectorXd a = semantic_cue(det(0, 0, 1, 1, 3, 0.8), 10);
  ASSERT_EQ(a.size(), 10);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a[i], i == 3 ? 0.8 : 0.0);
  EXPECT_EQ(semantic_cue(det(0, 0, 1, 1, 3, 0.0), 10).norm(), 0.0);
  EXPECT_THROW(semantic_cue(det(0, 0, 1, 1, 10, 0.5), 10), ClassOutOfRange);
}

TEST(TextureCue, Examples) {
  RgbImage img(2, 1);
  img.set(0, 0, {0, 0, 0});
  img.set(1, 0, {255, 255, 255});
  EXPECT_EQ(texture_cue(img, {0, 0}), Eigen::Vector3d(-1, -1, -1));
  EXPECT_EQ(texture_cue(img, {1, 0}), Eigen::Vector3d(1, 1, 1));
  const Eigen::Vector3d mid = texture_cue(img, {0.5, 0});
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(mid[c], 0.0, 1e-15);
  EXPECT_THROW(texture_cue(img, {1.5, 0}), OutOfBounds);
  EXPECT_THROW(texture_cue(img, {-0.1, 0}), OutOfBounds);

  RgbImage flat(8, 8);
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 8; ++u) flat.set(u, v, {51, 102, 204});
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 7);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d t = texture_cue(flat, {u(rng), u(rng)});
    EXPECT_NEAR(t[0], 51 / 127.5 - 1, 1e-12);
    EXPECT_NEAR(t[2], 204 / 127.5 - 1, 1e-12);
  }
}

TEST(TextureCue, BilinearOracleAndRange) {
  const RgbImage img = gradient_image();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> uu(0, 159), vv(0, 119);
  for (int i = 0; i < 500; ++i) {
    const double u = uu(rng), v = vv(rng);
    const Eigen::Vector3d t = texture_cue(img, {u, v});
    // channels are affine in u and v, so bilinear interpolation is exact
    EXPECT_NEAR(t[0], u / 127.5 - 1, 1e-12);
    EXPECT_NEAR(t[1], 2 * v / 127.5 - 1, 1e-12);
    EXPECT_LE(t.cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(AssembleCues, OutsideAllBoxesIsZeroPadding) {
  const CameraRig rig = test_rig();
  const auto cues = assemble_cues(seed_at(rig, 10, 10, 3), rig, {det(50, 50, 70, 70, 1, 0.9)},
                                  gradient_image(), 3);
  ASSERT_EQ(cues.size(), 1u);
  EXPECT_FALSE(cues[0].valid);
  EXPECT_EQ(cues[0].values.size(), 18);
  EXPECT_EQ(cues[0].values.norm(), 0.0);
}

TEST(AssembleCues, TwoBoxesGiveDistinctLiftedVotes) {
  const CameraRig rig = test_rig();
  const SeedPoint s = seed_at(rig, 60, 55, 2.5);
  const std::vector<Detection2D> dets{det(40, 40, 70, 90, 2, 0.7), det(50, 30, 120, 70, 5, 0.9)};
  const auto cues = assemble_cues(s, rig, dets, gradient_image(), 3);
  ASSERT_EQ(cues.size(), 2u);
  EXPECT_NE(cues[0].geom(), cues[1].geom());
  // highest score first; semantic part carries that box's class
  EXPECT_EQ(cues[0].semantic()[5], 0.9);
  EXPECT_EQ(cues[1].semantic()[2], 0.7);
  // geometric part equals the lifting of vote_2d(px, center) by construction
  const Point3 p_cam = rig.extrinsics.upright_to_camera(s.pos);
  const Pixel px = project(p_cam, rig.intrinsics);
  const std::size_t order[2] = {1, 0};
  for (int i = 0; i < 2; ++i) {
    const GeomCue cam = lift_camera(p_cam, vote_2d(px, dets[order[i]].box.center()), rig.intrinsics);
    const auto g = lift_to_upright(p_cam, cam, rig.extrinsics).values();
    for (int d = 0; d < 5; ++d) EXPECT_EQ(cues[i].geom()[d], g[d]);
    EXPECT_NEAR(cues[i].values.segment(2, 3).norm(), 1.0, 1e-12);
    EXPECT_TRUE(cues[i].valid);
  }
  EXPECT_NEAR(cues[0].texture()[0], px.u / 127.5 - 1, 1e-9);
}

TEST(AssembleCues, TruncatesToHighestScores) {
  const CameraRig rig = test_rig();
  std::vector<Detection2D> dets;
  const double scores[5] = {0.3, 0.95, 0.5, 0.8, 0.2};
  for (int i = 0; i < 5; ++i) dets.push_back(det(20 + i, 20, 100 + i, 100, i, scores[i]));
  const auto cues = assemble_cues(seed_at(rig, 60, 60, 2), rig, dets, gradient_image(), 3);
  ASSERT_EQ(cues.size(), 3u);
  EXPECT_EQ(cues[0].semantic()[1], 0.95);
  EXPECT_EQ(cues[1].semantic()[3], 0.8);
  EXPECT_EQ(cues[2].semantic()[2], 0.5);
  for (const auto& c : cues) EXPECT_EQ(c.values.size(), ImageCueVector::width(10));
}

TEST(AssembleCues, LengthIsClampedBoxCount) {
  const CameraRig rig = test_rig();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 159), v(0, 119);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Detection2D> dets;
    for (int i = 0; i < 6; ++i) {
      const double a = u(rng), b = v(rng);
      dets.push_back(det(a, b, a + 30, b + 30, i % 10, 0.1 + 0.1 * i));
    }
    const double su = u(rng), sv = v(rng);
    int q = 0;
    for (const auto& d : dets) q += su >= d.box.umin && su <= d.box.umax && sv >= d.box.vmin && sv <= d.box.vmax;
    for (int kmax : {1, 2, 3}) {
      const auto cues = assemble_cues(seed_at(rig, su, sv, 3), rig, dets, gradient_image(), kmax);
      EXPECT_EQ(static_cast<int>(cues.size()), std::max(1, std::min(q, kmax)));
    }
  }
}

TEST(ImageCueVector, WidthAtDefaults) {
  EXPECT_EQ(ImageCueVector::width(10), 18);
  EXPECT_EQ(ImageCueVector::width(3), 11);
}
