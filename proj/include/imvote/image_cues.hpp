#pragma once

// Per-seed image cues: a lifted geometric vote toward each containing 2D box,
// the box's one-hot class score, and the bilinearly sampled pixel color.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "imvote/geometry.hpp"
#include "imvote/image.hpp"
#include "imvote/vote_lift.hpp"

namespace imvote {

inline constexpr int kDefaultNumClasses = 10;
inline constexpr int kTextureDims = 3;

struct Box2D {
  double umin = 0.0;
  double vmin = 0.0;
  double umax = 0.0;
  double vmax = 0.0;

  double width() const { return umax - umin; }
  double height() const { return vmax - vmin; }
  double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
  Pixel center() const { return {0.5 * (umin + umax), 0.5 * (vmin + vmax)}; }
  bool contains(const Pixel& p) const {
    return p.u >= umin && p.u <= umax && p.v >= vmin && p.v <= vmax;
  }
};

inline double iou2d(const Box2D& a, const Box2D& b) {
  const double iw = std::min(a.umax, b.umax) - std::max(a.umin, b.umin);
  const double ih = std::min(a.vmax, b.vmax) - std::max(a.vmin, b.vmin);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

struct Detection2D {
  Box2D box;
  int class_id = 0;
  double score = 0.0;

  bool valid() const {
    return box.umin < box.umax && box.vmin < box.vmax && score >= 0.0 && score <= 1.0 &&
           class_id >= 0;
  }
};

inline constexpr int kDefaultMaxBoxes = 100;
inline constexpr double kDefaultMinScore = 0.1;

// Keeps the `max_boxes` most confident detections scoring at least
// `min_score`, ordered by descending score, then class id, then input order.
inline std::vector<Detection2D> filter_detections(const std::vector<Detection2D>& dets,
                                                  int max_boxes = kDefaultMaxBoxes,
                                                  double min_score = kDefaultMinScore) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].score >= min_score) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    return dets[a].class_id < dets[b].class_id;
  });
  if (static_cast<int>(order.size()) > max_boxes) order.resize(std::max(0, max_boxes));
  std::vector<Detection2D> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(dets[i]);
  return out;
}

inline std::vector<std::size_t> boxes_containing(const Pixel& px,
                                                 const std::vector<Detection2D>& dets) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].box.contains(px)) out.push_back(i);
  }
  return out;
}

inline Eigen::VectorXd semantic_cue(const Detection2D& det, int num_classes) {
  if (det.class_id < 0 || det.class_id >= num_classes) throw ClassOutOfRange();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(num_classes);
  out[det.class_id] = det.score;
  return out;
}

// Bilinear RGB sample mapped from [0, 255] to [-1, 1].
inline Eigen::Vector3d texture_cue(const RgbImage& image, const Pixel& px) {
  if (!image.contains(px.u, px.v)) throw OutOfBounds();
  const int u0 = std::min(static_cast<int>(std::floor(px.u)), image.width() - 1);
  const int v0 = std::min(static_cast<int>(std::floor(px.v)), image.height() - 1);
  const int u1 = std::min(u0 + 1, image.width() - 1);
  const int v1 = std::min(v0 + 1, image.height() - 1);
  const double a = px.u - u0;
  const double b = px.v - v0;
  Eigen::Vector3d out;
  for (int c = 0; c < 3; ++c) {
    const double top = (1.0 - a) * image.at(u0, v0, c) + a * image.at(u1, v0, c);
    const double bottom = (1.0 - a) * image.at(u0, v1, c) + a * image.at(u1, v1, c);
    const double value = (1.0 - b) * top + b * bottom;
    out[c] = value / 127.5 - 1.0;
  }
  return out;
}

// Flat cue of width 5 + NC + 3: [pseudo vote (2), ray direction (3),
// semantic (NC), texture (3)]. An invalid cue is all zeros.
struct ImageCueVector {
  Eigen::VectorXd values;
  bool valid = false;

  static int width(int num_classes) { return GeomCue::kDims + num_classes + kTextureDims; }
  static ImageCueVector zeros(int num_classes) {
    return {Eigen::VectorXd::Zero(width(num_classes)), false};
  }

  int num_classes() const { return static_cast<int>(values.size()) - GeomCue::kDims - kTextureDims; }
  auto geom() const { return values.head(GeomCue::kDims); }
  auto semantic() const { return values.segment(GeomCue::kDims, num_classes()); }
  auto texture() const { return values.tail(kTextureDims); }
};

struct SeedPoint {
  Point3 pos;  // upright frame
  double height = 0.0;
  Eigen::VectorXd feature;
};

// One cue per 2D box containing the seed's projection, highest score first,
// at most `k_max`; a single all-zero cue when no box contains it.
inline std::vector<ImageCueVector> assemble_cues(const SeedPoint& seed, const CameraRig& rig,
                                                 const std::vector<Detection2D>& dets,
                                                 const RgbImage& image, int k_max,
                                                 int num_classes = kDefaultNumClasses) {
  const Point3 p_cam = rig.extrinsics.upright_to_camera(seed.pos);
  const Pixel px = project(p_cam, rig.intrinsics);

  std::vector<std::size_t> hits = boxes_containing(px, dets);
  std::stable_sort(hits.begin(), hits.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  if (static_cast<int>(hits.size()) > k_max) hits.resize(std::max(0, k_max));
  if (hits.empty()) return {ImageCueVector::zeros(num_classes)};

  // Boxes may poke past the image border; the color lookup is clamped.
  const Pixel sample{std::clamp(px.u, 0.0, image.width() - 1.0),
                     std::clamp(px.v, 0.0, image.height() - 1.0)};
  const Eigen::Vector3d texture = texture_cue(image, sample);

  std::vector<ImageCueVector> out;
  out.reserve(hits.size());
  for (auto i : hits) {
    const GeomCue cam = lift_camera(p_cam, vote_2d(px, dets[i].box.center()), rig.intrinsics);
    const GeomCue up = lift_to_upright(p_cam, cam, rig.extrinsics);
    ImageCueVector cue{Eigen::VectorXd(ImageCueVector::width(num_classes)), true};
    const auto g = up.values();
    for (int d = 0; d < GeomCue::kDims; ++d) cue.values[d] = g[d];
    cue.values.segment(GeomCue::kDims, num_classes) = semantic_cue(dets[i], num_classes);
    cue.values.tail(kTextureDims) = texture;
    out.push_back(std::move(cue));
  }
  return out;
}

}  // namespace imvote
