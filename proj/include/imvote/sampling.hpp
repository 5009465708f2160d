#pragma once

#include <limits>
#include <span>
#include <vector>

#include "imvote/geometry.hpp"

namespace imvote {

// Farthest point sampling from `start`. Ties go to the lowest index.
inline std::vector<int> farthest_point_sample(std::span<const Point3> pts, int count, int start = 0) {
  const int n = static_cast<int>(pts.size());
  std::vector<int> out;
  if (n == 0 || count <= 0) return out;
  count = std::min(count, n);
  out.reserve(count);
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  int last = start;
  out.push_back(last);
  dist[last] = -1.0;
  while (static_cast<int>(out.size()) < count) {
    int best = -1;
    double best_d = -1.0;
    const Point3 p = pts[last];
    for (int i = 0; i < n; ++i) {
      if (dist[i] < 0.0) continue;
      const Vec3 d = pts[i] - p;
      const double d2 = d.dot(d);
      if (d2 < dist[i]) dist[i] = d2;
      if (dist[i] > best_d) {
        best_d = dist[i];
        best = i;
      }
    }
    last = best;
    dist[last] = -1.0;
    out.push_back(last);
  }
  return out;
}

// Indices within `radius` of pts[center], the center first, then the rest in
// index order, capped at `max_count`.
inline std::vector<int> ball_query(std::span<const Point3> pts, int center, double radius,
                                   int max_count) {
  std::vector<int> out{center};
  const double r2 = radius * radius;
  const Point3 c = pts[center];
  for (int i = 0; i < static_cast<int>(pts.size()) && static_cast<int>(out.size()) < max_count; ++i) {
    if (i == center) continue;
    const Vec3 d = pts[i] - c;
    if (d.dot(d) <= r2) out.push_back(i);
  }
  return out;
}

}  // namespace imvote
