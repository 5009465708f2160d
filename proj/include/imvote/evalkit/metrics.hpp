#pragma once

// Detection metrics: oriented 3D IoU, greedy NMS and all-points average
// precision.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "imvote/box3d.hpp"

namespace imvote::eval {

struct DetectionResult3D {
  Box3 box;
  int class_id = 0;
  double score = 0.0;
  int scene = 0;
};

struct GroundTruth3D {
  Box3 box;
  int class_id = 0;
  int scene = 0;
};

using Point2 = std::array<double, 2>;

inline double polygon_area(const std::vector<Point2>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * std::abs(a);
}

// Sutherland-Hodgman: clips `subject` against the convex counter-clockwise `clip`.
inline std::vector<Point2> clip_polygon(std::vector<Point2> subject, const std::vector<Point2>& clip) {
  auto side = [](const Point2& a, const Point2& b, const Point2& p) {
    return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
  };
  for (std::size_t e = 0; e < clip.size() && !subject.empty(); ++e) {
    const Point2& a = clip[e];
    const Point2& b = clip[(e + 1) % clip.size()];
    std::vector<Point2> out;
    for (std::size_t i = 0; i < subject.size(); ++i) {
      const Point2& cur = subject[i];
      const Point2& prev = subject[(i + subject.size() - 1) % subject.size()];
      const double sc = side(a, b, cur);
      const double sp = side(a, b, prev);
      if (sc >= 0.0) {
        if (sp < 0.0) {
          const double t = sp / (sp - sc);
          out.push_back({prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])});
        }
        out.push_back(cur);
      } else if (sp >= 0.0) {
        const double t = sp / (sp - sc);
        out.push_back({prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])});
      }
    }
    subject = std::move(out);
  }
  return subject;
}

// IoU of two boxes sharing the up axis: footprint intersection times
// vertical overlap.
inline double iou3d(const Box3& a, const Box3& b) {
  const double z_lo = std::max(a.center.z - 0.5 * a.size.z, b.center.z - 0.5 * b.size.z);
  const double z_hi = std::min(a.center.z + 0.5 * a.size.z, b.center.z + 0.5 * b.size.z);
  if (z_hi <= z_lo) return 0.0;
  const auto fa = a.footprint();
  const auto fb = b.footprint();
  const std::vector<Point2> pa(fa.begin(), fa.end());
  const std::vector<Point2> pb(fb.begin(), fb.end());
  const auto inter_poly = clip_polygon(pa, pb);
  if (inter_poly.size() < 3) return 0.0;
  const double inter = polygon_area(inter_poly) * (z_hi - z_lo);
  if (!(inter > 0.0)) return 0.0;
  const double uni = a.volume() + b.volume() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

// Greedy per-class suppression in descending score order; a box is dropped
// when its IoU with a kept box of the same class exceeds `iou_thresh`.
inline std::vector<DetectionResult3D> nms3d(const std::vector<DetectionResult3D>& dets, double iou_thresh) {
  std::vector<std::size_t> order(dets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  std::vector<DetectionResult3D> kept;
  for (auto i : order) {
    bool keep = true;
    for (const auto& k : kept) {
      if (k.class_id == dets[i].class_id && k.scene == dets[i].scene &&
          iou3d(k.box, dets[i].box) > iou_thresh) {
        keep = false;
        break;
      }
    }
    if (keep) kept.push_back(dets[i]);
  }
  return kept;
}

struct PrCurve {
  std::vector<double> recall;
  std::vector<double> precision;
  double ap = 0.0;
  int num_gt = 0;
};

struct ApReport {
  std::map<int, PrCurve> per_class;  // classes with at least one ground truth
  double map = 0.0;
};

// Detections are matched in descending score order to the same-class ground
// truth of highest IoU in their scene; a match counts when IoU >= thresh and
// that ground truth is still unmatched. AP uses all-points interpolation.
inline ApReport average_precision(const std::vector<DetectionResult3D>& dets,
                                  const std::vector<GroundTruth3D>& gts, double iou_thresh) {
  ApReport report;
  std::map<int, int> gt_count;
  for (const auto& g : gts) ++gt_count[g.class_id];
  for (const auto& [cls, count] : gt_count) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < dets.size(); ++i)
      if (dets[i].class_id == cls) order.push_back(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
    std::vector<bool> used(gts.size(), false);
    PrCurve curve;
    curve.num_gt = count;
    int tp = 0;
    int fp = 0;
    for (auto i : order) {
      double best = -1.0;
      int best_g = -1;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (gts[g].class_id != cls || gts[g].scene != dets[i].scene) continue;
        const double iou = iou3d(dets[i].box, gts[g].box);
        if (iou > best) {
          best = iou;
          best_g = static_cast<int>(g);
        }
      }
      if (best_g >= 0 && best >= iou_thresh && !used[best_g]) {
        used[best_g] = true;
        ++tp;
      } else {
        ++fp;
      }
      curve.recall.push_back(static_cast<double>(tp) / count);
      curve.precision.push_back(static_cast<double>(tp) / (tp + fp));
    }
    // precision envelope, right to left
    std::vector<double> env = curve.precision;
    for (std::size_t i = env.size(); i-- > 1;) env[i - 1] = std::max(env[i - 1], env[i]);
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < env.size(); ++i) {
      curve.ap += (curve.recall[i] - prev_recall) * env[i];
      prev_recall = curve.recall[i];
    }
    report.per_class[cls] = std::move(curve);
  }
  if (!report.per_class.empty()) {
    double sum = 0.0;
    for (const auto& [cls, c] : report.per_class) sum += c.ap;
    report.map = sum / static_cast<double>(report.per_class.size());
  }
  return report;
}

}  // namespace imvote::eval
