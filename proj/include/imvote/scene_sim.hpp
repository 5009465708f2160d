#pragma once

// Synthetic RGB-D scenes: oriented boxes standing on a floor inside a room,
// ray-cast into a depth point cloud and a flat-shaded color image, with
// oracle 2D detections and the two sparse-sampling regimes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <numbers>
#include <random>
#include <vector>

#include "imvote/box3d.hpp"
#include "imvote/geometry.hpp"
#include "imvote/image.hpp"
#include "imvote/image_cues.hpp"
#include "imvote/vote_lift.hpp"

namespace imvote {

struct ClassTemplate {
  Vec3 size{0.6, 0.6, 0.6};
  double size_jitter = 0.1;  // relative, uniform per axis
  std::array<double, 3> color{0.5, 0.5, 0.5};
};

struct SimConfig {
  int min_objects = 1;
  int max_objects = 3;
  std::vector<ClassTemplate> classes{
      {{1.0, 0.6, 0.7}, 0.1, {0.75, 0.30, 0.20}},
      {{1.0, 0.6, 0.7}, 0.1, {0.20, 0.35, 0.80}},
      {{0.5, 0.5, 0.5}, 0.1, {0.25, 0.70, 0.30}},
  };
  int image_width = 160;
  int image_height = 120;
  double focal = 140.0;
  double camera_height_min = 1.3;
  double camera_height_max = 1.6;
  double pitch_min = 20.0 * std::numbers::pi / 180.0;
  double pitch_max = 30.0 * std::numbers::pi / 180.0;
  double roll_max = 2.0 * std::numbers::pi / 180.0;
  double room_depth = 5.5;       // back wall at y = room_depth
  double room_half_width = 3.0;  // side walls at x = +-room_half_width
  double place_y_min = 1.8;
  double place_y_max = 4.0;
  double heading_range = std::numbers::pi / 6.0;  // headings uniform in [-range, range]
  double min_gap = 0.1;
  int num_points = 2000;
  double depth_noise = 0.0;  // meters, along the viewing ray
  // Image-only background texture: checker tiles on the floor and flat
  // rectangular decals on the walls. Geometry is unaffected.
  double floor_tile = 0.5;       // meters; 0 disables the checker
  double floor_contrast = 0.25;  // relative albedo swing between tiles
  int min_decals = 2;
  int max_decals = 5;
  int max_placement_tries = 200;

  int num_classes() const { return static_cast<int>(classes.size()); }

  void validate() const {
    if (min_objects < 0 || max_objects < min_objects) throw ConfigError("bad object count range");
    if (classes.empty()) throw ConfigError("need at least one object class");
    if (image_width < 2 || image_height < 2 || !(focal > 0)) throw ConfigError("bad camera");
    if (!(place_y_min > 0) || place_y_max < place_y_min || place_y_max >= room_depth)
      throw ConfigError("bad placement range");
    if (num_points < 1) throw ConfigError("num_points must be >= 1");
    if (!(camera_height_min > 0) || camera_height_max < camera_height_min)
      throw ConfigError("bad camera height range");
    if (floor_tile < 0 || floor_contrast < 0 || floor_contrast >= 1 || min_decals < 0 || max_decals < min_decals)
      throw ConfigError("bad background texture settings");
  }
};

struct SceneObject {
  Box3 box;
  int class_id = 0;
  std::array<double, 3> albedo{0.5, 0.5, 0.5};
};

inline constexpr int kBackground = -1;

// Flat colored rectangle on a wall: `wall` 0 back, 1 left, 2 right; `a` is the
// horizontal wall coordinate (x on the back wall, y on the side walls).
struct WallDecal {
  int wall = 0;
  double a0 = 0, a1 = 0, z0 = 0, z1 = 0;
  std::array<double, 3> color{0.5, 0.5, 0.5};
};

struct SceneGT {
  std::vector<SceneObject> objects;
  CameraRig rig;
  double floor_z = 0.0;
  double floor_tile = 0.0;
  double floor_contrast = 0.0;
  std::vector<WallDecal> decals;
  // Sampled cloud handed to the detector.
  std::vector<Point3> points;
  std::vector<int> labels;
  // Every depth pixel that hit a surface.
  std::vector<Point3> dense_points;
  std::vector<int> dense_labels;
  RgbImage image;
};

namespace detail {

inline constexpr std::array<double, 3> kFloorColor{0.55, 0.50, 0.45};
inline constexpr std::array<double, 3> kBackWallColor{0.80, 0.80, 0.74};
inline constexpr std::array<double, 3> kSideWallColor{0.66, 0.70, 0.74};

inline double shade(const Vec3& normal) {
  static const Vec3 light = Vec3{0.3, -0.5, 0.8} / Vec3{0.3, -0.5, 0.8}.norm();
  return 0.35 + 0.65 * std::max(0.0, normal.dot(light));
}

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L));
}

// Ray/box slab test from the origin; returns entry distance and face normal.
inline bool intersect_box(const Box3& b, const Vec3& dir, double& t_hit, Vec3& normal) {
  const Vec3 o = b.to_local({0, 0, 0});
  const Vec3 d{dir.dot(b.axis_x()), dir.dot(b.axis_y()), dir.z};
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  int axis = -1;
  double axis_sign = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double h = 0.5 * b.size[k];
    if (std::abs(d[k]) < 1e-15) {
      if (o[k] < -h || o[k] > h) return false;
      continue;
    }
    double ta = (-h - o[k]) / d[k];
    double tb = (h - o[k]) / d[k];
    double s = -1.0;
    if (ta > tb) {
      std::swap(ta, tb);
      s = 1.0;
    }
    if (ta > t0) {
      t0 = ta;
      axis = k;
      axis_sign = s;
    }
    t1 = std::min(t1, tb);
  }
  if (axis < 0 || t0 > t1 || t0 <= 0.0) return false;
  t_hit = t0;
  const Vec3 ln = axis == 0 ? b.axis_x() : (axis == 1 ? b.axis_y() : Vec3{0, 0, 1});
  normal = ln * axis_sign;
  return true;
}

template <class Rng>
double beta_sample(Rng& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

}  // namespace detail

// Renders depth points and colors for the given objects and camera.
inline void render_scene(SceneGT& s, int width, int height, double room_depth,
                         double room_half_width) {
  const auto& k = s.rig.intrinsics;
  s.image = RgbImage(width, height);
  s.dense_points.clear();
  s.dense_labels.clear();
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const Vec3 d_cam{(u - k.cu) / k.f, (v - k.cv) / k.f, 1.0};
      const Vec3 d = s.rig.extrinsics.camera_to_upright(d_cam);
      double best = std::numeric_limits<double>::infinity();
      int label = kBackground;
      std::array<double, 3> color{0, 0, 0};
      Vec3 normal;
      auto decal = [&](int wall, double a, double z) {
        for (const auto& dc : s.decals)
          if (dc.wall == wall && a >= dc.a0 && a <= dc.a1 && z >= dc.z0 && z <= dc.z1) color = dc.color;
      };
      if (d.z < 0.0) {
        const double t = s.floor_z / d.z;
        if (t > 0 && t < best) {
          best = t;
          color = detail::kFloorColor;
          normal = {0, 0, 1};
          if (s.floor_tile > 0.0) {
            const Vec3 q = d * t;
            const long parity = static_cast<long>(std::floor(q.x / s.floor_tile)) +
                                static_cast<long>(std::floor(q.y / s.floor_tile));
            const double m = (parity % 2 == 0) ? 1.0 + s.floor_contrast : 1.0 - s.floor_contrast;
            for (auto& c : color) c *= m;
          }
        }
      }
      if (d.y > 0.0) {
        const double t = room_depth / d.y;
        if (t < best) {
          best = t;
          color = detail::kBackWallColor;
          normal = {0, -1, 0};
          const Vec3 q = d * t;
          decal(0, q.x, q.z);
        }
      }
      if (d.x != 0.0) {
        const double t = (d.x > 0 ? room_half_width : -room_half_width) / d.x;
        if (t > 0 && t < best) {
          best = t;
          color = detail::kSideWallColor;
          normal = {d.x > 0 ? -1.0 : 1.0, 0, 0};
          const Vec3 q = d * t;
          decal(d.x > 0 ? 2 : 1, q.y, q.z);
        }
      }
      for (std::size_t i = 0; i < s.objects.size(); ++i) {
        double t;
        Vec3 n;
        if (detail::intersect_box(s.objects[i].box, d, t, n) && t < best) {
          best = t;
          label = static_cast<int>(i);
          color = s.objects[i].albedo;
          normal = n;
        }
      }
      if (!std::isfinite(best)) continue;
      const double sh = detail::shade(normal);
      s.image.set(u, v, {detail::to_byte(color[0] * sh), detail::to_byte(color[1] * sh),
                         detail::to_byte(color[2] * sh)});
      s.dense_points.push_back(d * best);
      s.dense_labels.push_back(label);
    }
  }
}

// Indices of `count` distinct elements of [0, n), ascending.
template <class Rng>
std::vector<int> choose_without_replacement(int n, int count, Rng& rng) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  count = std::clamp(count, 0, n);
  for (int i = 0; i < count; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline SceneGT generate_scene(const SimConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };

  SceneGT s;
  const double cam_h = uniform(cfg.camera_height_min, cfg.camera_height_max);
  s.floor_z = -cam_h;
  s.rig.intrinsics = CameraIntrinsics(cfg.focal, 0.5 * (cfg.image_width - 1), 0.5 * (cfg.image_height - 1));
  s.rig.extrinsics = level_camera(uniform(cfg.pitch_min, cfg.pitch_max), uniform(-cfg.roll_max, cfg.roll_max));

  const int n = std::uniform_int_distribution<int>(cfg.min_objects, cfg.max_objects)(rng);
  const double half_fov = std::atan(0.5 * cfg.image_width / cfg.focal);
  for (int i = 0; i < n; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_placement_tries && !placed; ++attempt) {
      SceneObject o;
      o.class_id = std::uniform_int_distribution<int>(0, cfg.num_classes() - 1)(rng);
      const ClassTemplate& tpl = cfg.classes[o.class_id];
      for (int k = 0; k < 3; ++k) o.box.size[k] = tpl.size[k] * (1.0 + uniform(-tpl.size_jitter, tpl.size_jitter));
      o.box.heading = uniform(-cfg.heading_range, cfg.heading_range);
      const double y = uniform(cfg.place_y_min, cfg.place_y_max);
      const double span = std::max(0.0, 0.8 * y * std::tan(half_fov) - 0.5 * std::max(o.box.size.x, o.box.size.y));
      o.box.center = {uniform(-span, span), y, s.floor_z + 0.5 * o.box.size.z};
      for (int k = 0; k < 3; ++k) o.albedo[k] = std::clamp(tpl.color[k] + uniform(-0.05, 0.05), 0.0, 1.0);

      const double radius = 0.5 * std::hypot(o.box.size.x, o.box.size.y);
      bool ok = true;
      for (const auto& other : s.objects) {
        const double r2 = 0.5 * std::hypot(other.box.size.x, other.box.size.y);
        const Vec3 d = o.box.center - other.box.center;
        if (std::hypot(d.x, d.y) < radius + r2 + cfg.min_gap) ok = false;
      }
      for (const Vec3& c : o.box.corners()) {
        if (c.z > -0.05) ok = false;  // stays below the camera
        if (s.rig.extrinsics.upright_to_camera(c).z < 0.2) ok = false;
      }
      if (ok) {
        const Pixel px = project(s.rig.extrinsics.upright_to_camera(o.box.center), s.rig.intrinsics);
        ok = px.u >= 0 && px.v >= 0 && px.u <= cfg.image_width - 1 && px.v <= cfg.image_height - 1;
      }
      if (ok) {
        s.objects.push_back(o);
        placed = true;
      }
    }
    if (!placed) throw PlacementFailure();
  }

  s.floor_tile = cfg.floor_tile;
  s.floor_contrast = cfg.floor_contrast;
  const int n_decals = std::uniform_int_distribution<int>(cfg.min_decals, cfg.max_decals)(rng);
  for (int i = 0; i < n_decals; ++i) {
    WallDecal dc;
    dc.wall = std::uniform_int_distribution<int>(0, 2)(rng);
    const double w = uniform(0.4, 1.2);
    const double h = uniform(0.3, 0.9);
    const double lo = dc.wall == 0 ? -cfg.room_half_width : 0.5;
    const double hi = dc.wall == 0 ? cfg.room_half_width - w : cfg.room_depth - w;
    dc.a0 = uniform(lo, hi);
    dc.a1 = dc.a0 + w;
    dc.z0 = uniform(s.floor_z + 0.3, s.floor_z + 2.2);
    dc.z1 = dc.z0 + h;
    for (auto& c : dc.color) c = uniform(0.1, 0.95);
    s.decals.push_back(dc);
  }
  render_scene(s, cfg.image_width, cfg.image_height, cfg.room_depth, cfg.room_half_width);
  if (cfg.depth_noise > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.depth_noise);
    for (auto& p : s.dense_points) p = p * (1.0 + noise(rng) / p.norm());
  }
  for (int i : choose_without_replacement(static_cast<int>(s.dense_points.size()), cfg.num_points, rng)) {
    s.points.push_back(s.dense_points[i]);
    s.labels.push_back(s.dense_labels[i]);
  }
  return s;
}

// 1% percentile of point heights.
inline double estimate_floor(const std::vector<Point3>& points) {
  if (points.empty()) return 0.0;
  std::vector<double> z;
  z.reserve(points.size());
  for (const auto& p : points) z.push_back(p.z);
  const std::size_t k = static_cast<std::size_t>(0.01 * static_cast<double>(z.size() - 1));
  std::nth_element(z.begin(), z.begin() + k, z.end());
  return z[k];
}

inline std::vector<double> point_heights(const std::vector<Point3>& points) {
  const double floor = estimate_floor(points);
  std::vector<double> h;
  h.reserve(points.size());
  for (const auto& p : points) h.push_back(p.z - floor);
  return h;
}

struct GtVote {
  int point_index = 0;
  Vote2D vote_2d;
  Vec3 true_vote;  // C - P, upright
};

inline std::vector<GtVote> ground_truth_votes(const SceneGT& s) {
  std::vector<GtVote> out;
  const auto& e = s.rig.extrinsics;
  const auto& k = s.rig.intrinsics;
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    if (s.labels[i] < 0) continue;
    const Point3& c = s.objects[s.labels[i]].box.center;
    const Pixel pp = project(e.upright_to_camera(s.points[i]), k);
    const Pixel pc = project(e.upright_to_camera(c), k);
    out.push_back({static_cast<int>(i), vote_2d(pp, pc), c - s.points[i]});
  }
  return out;
}

// Tight image rectangle of an object's amodal box, clipped to the image.
inline std::optional<Box2D> projected_box(const SceneGT& s, const Box3& b) {
  Box2D r{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Vec3& c : b.corners()) {
    const Pixel px = project(s.rig.extrinsics.upright_to_camera(c), s.rig.intrinsics);
    r.umin = std::min(r.umin, px.u);
    r.vmin = std::min(r.vmin, px.v);
    r.umax = std::max(r.umax, px.u);
    r.vmax = std::max(r.vmax, px.v);
  }
  r.umin = std::max(r.umin, 0.0);
  r.vmin = std::max(r.vmin, 0.0);
  r.umax = std::min(r.umax, s.image.width() - 1.0);
  r.vmax = std::min(r.vmax, s.image.height() - 1.0);
  if (!(r.umin < r.umax && r.vmin < r.vmax)) return std::nullopt;
  return r;
}

struct NoiseSpec {
  double jitter = 0.0;             // relative Gaussian sigma on box center and extent
  double drop_prob = 0.0;
  double class_confusion = 0.0;    // probability of a wrong class label
  double false_positive_rate = 0.0;  // mean false boxes per image
  bool noisy_scores = false;       // false: every true box scores 1
  double score_a = 6.0;            // Beta(a, b) for true boxes
  double score_b = 1.5;
  double fp_score_a = 1.5;         // Beta(a, b) for false boxes
  double fp_score_b = 4.0;
  int max_boxes = kDefaultMaxBoxes;
  double min_score = kDefaultMinScore;
};

inline std::vector<Detection2D> oracle_detections(const SceneGT& s, const NoiseSpec& noise,
                                                  std::uint64_t seed, int num_classes) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<int> visible(s.objects.size(), 0);
  for (int l : s.dense_labels)
    if (l >= 0) visible[l] = 1;

  std::vector<Detection2D> dets;
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    if (!visible[i]) continue;
    const auto rect = projected_box(s, s.objects[i].box);
    if (!rect) continue;
    if (noise.drop_prob > 0.0 && unit(rng) < noise.drop_prob) continue;
    Box2D b = *rect;
    if (noise.jitter > 0.0) {
      const Pixel c = b.center();
      const double w = b.width() * std::max(0.1, 1.0 + noise.jitter * gauss(rng));
      const double h = b.height() * std::max(0.1, 1.0 + noise.jitter * gauss(rng));
      const double cu = c.u + noise.jitter * b.width() * gauss(rng);
      const double cv = c.v + noise.jitter * b.height() * gauss(rng);
      b = {cu - 0.5 * w, cv - 0.5 * h, cu + 0.5 * w, cv + 0.5 * h};
    }
    int cls = s.objects[i].class_id;
    if (noise.class_confusion > 0.0 && num_classes > 1 && unit(rng) < noise.class_confusion) {
      const int other = std::uniform_int_distribution<int>(0, num_classes - 2)(rng);
      cls = other >= cls ? other + 1 : other;
    }
    const double score = noise.noisy_scores ? detail::beta_sample(rng, noise.score_a, noise.score_b) : 1.0;
    dets.push_back({b, cls, score});
  }
  if (noise.false_positive_rate > 0.0) {
    const int n_fp = std::poisson_distribution<int>(noise.false_positive_rate)(rng);
    const double W = s.image.width() - 1.0;
    const double H = s.image.height() - 1.0;
    for (int i = 0; i < n_fp; ++i) {
      const double w = 10.0 + 40.0 * unit(rng);
      const double h = 10.0 + 40.0 * unit(rng);
      const double u0 = unit(rng) * std::max(1.0, W - w);
      const double v0 = unit(rng) * std::max(1.0, H - h);
      const int cls = std::uniform_int_distribution<int>(0, num_classes - 1)(rng);
      dets.push_back({{u0, v0, u0 + w, v0 + h}, cls, detail::beta_sample(rng, noise.fp_score_a, noise.fp_score_b)});
    }
  }
  return filter_detections(dets, noise.max_boxes, noise.min_score);
}

// --- sparse sampling --------------------------------------------------------

enum class SamplingMethod { Uniform, Keypoint };

struct SamplingSpec {
  SamplingMethod method = SamplingMethod::Uniform;
  int target_count = 1;
  double pixel_radius = 2.0;
  int max_keypoints = 200;
  double harris_k = 0.04;
  double min_response = 0.01;  // relative to the strongest response
};

// Harris corner response of a grayscale image (row-major, width * height).
inline std::vector<double> harris_response(const std::vector<double>& gray, int width, int height,
                                           double k = 0.04) {
  auto at = [&](int u, int v) {
    u = std::clamp(u, 0, width - 1);
    v = std::clamp(v, 0, height - 1);
    return gray[static_cast<std::size_t>(v) * width + u];
  };
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<double> ixx(n), iyy(n), ixy(n);
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const double gx = (at(u + 1, v - 1) + 2 * at(u + 1, v) + at(u + 1, v + 1)) -
                        (at(u - 1, v - 1) + 2 * at(u - 1, v) + at(u - 1, v + 1));
      const double gy = (at(u - 1, v + 1) + 2 * at(u, v + 1) + at(u + 1, v + 1)) -
                        (at(u - 1, v - 1) + 2 * at(u, v - 1) + at(u + 1, v - 1));
      const std::size_t i = static_cast<std::size_t>(v) * width + u;
      ixx[i] = gx * gx;
      iyy[i] = gy * gy;
      ixy[i] = gx * gy;
    }
  }
  // 5x5 binomial window
  static constexpr std::array<double, 5> w{1, 4, 6, 4, 1};
  std::vector<double> out(n, 0.0);
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      double a = 0, b = 0, c = 0;
      for (int dv = -2; dv <= 2; ++dv) {
        for (int du = -2; du <= 2; ++du) {
          const int uu = std::clamp(u + du, 0, width - 1);
          const int vv = std::clamp(v + dv, 0, height - 1);
          const double ww = w[du + 2] * w[dv + 2] / 256.0;
          const std::size_t j = static_cast<std::size_t>(vv) * width + uu;
          a += ww * ixx[j];
          b += ww * iyy[j];
          c += ww * ixy[j];
        }
      }
      out[static_cast<std::size_t>(v) * width + u] = a * b - c * c - k * (a + b) * (a + b);
    }
  }
  return out;
}

// Strongest 3x3-local maxima of the Harris response, skipping a 2-pixel border.
inline std::vector<Pixel> detect_keypoints(const RgbImage& image, const SamplingSpec& spec) {
  const int W = image.width();
  const int H = image.height();
  const auto r = harris_response(image.grayscale(), W, H, spec.harris_k);
  const double peak = *std::max_element(r.begin(), r.end());
  if (!(peak > 0.0)) return {};
  struct Cand {
    double score;
    int index;
  };
  std::vector<Cand> cands;
  for (int v = 2; v < H - 2; ++v) {
    for (int u = 2; u < W - 2; ++u) {
      const std::size_t i = static_cast<std::size_t>(v) * W + u;
      if (r[i] < spec.min_response * peak) continue;
      bool is_max = true;
      for (int dv = -1; dv <= 1 && is_max; ++dv)
        for (int du = -1; du <= 1; ++du) {
          if (!du && !dv) continue;
          const double o = r[static_cast<std::size_t>(v + dv) * W + (u + du)];
          // strict against earlier neighbours so plateaus yield one keypoint
          if (o > r[i] || (o == r[i] && (dv < 0 || (dv == 0 && du < 0)))) {
            is_max = false;
            break;
          }
        }
      if (is_max) cands.push_back({r[i], static_cast<int>(i)});
    }
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.score > b.score; });
  if (static_cast<int>(cands.size()) > spec.max_keypoints) cands.resize(spec.max_keypoints);
  std::vector<Pixel> out;
  for (const auto& c : cands) out.push_back({static_cast<double>(c.index % W), static_cast<double>(c.index / W)});
  return out;
}

// Indices (ascending) of the retained points.
inline std::vector<int> subsample(const std::vector<Point3>& points, const SamplingSpec& spec,
                                  const CameraRig& rig, const RgbImage& image, std::uint64_t seed) {
  if (spec.target_count < 1) throw ConfigError("target_count must be >= 1");
  std::mt19937_64 rng(seed);
  const int n = static_cast<int>(points.size());
  if (spec.method == SamplingMethod::Uniform) {
    return choose_without_replacement(n, spec.target_count, rng);
  }
  const auto keypoints = detect_keypoints(image, spec);
  const double r2 = spec.pixel_radius * spec.pixel_radius;
  std::vector<int> near;
  for (int i = 0; i < n; ++i) {
    const Point3 pc = rig.extrinsics.upright_to_camera(points[i]);
    if (!(pc.z > 0.0)) continue;
    const Pixel px = project(pc, rig.intrinsics);
    for (const auto& k : keypoints) {
      const double du = px.u - k.u;
      const double dv = px.v - k.v;
      if (du * du + dv * dv <= r2) {
        near.push_back(i);
        break;
      }
    }
  }
  std::vector<int> out;
  for (int j : choose_without_replacement(static_cast<int>(near.size()), spec.target_count, rng)) {
    out.push_back(near[j]);
  }
  return out;
}

}  // namespace imvote
