#pragma once

// Physical-plausibility measures over executed leaf cuboids: contact graph
// with a ground node, rootedness, and a quasi-static stability test (centre of
// mass over the ground-contact footprint hull).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "shapeasm/geometry.hpp"

namespace shapeasm {

struct ConnectivityGraph {
  int leaf_count = 0;  // nodes 0..leaf_count-1 are leaves, node leaf_count is the ground
  double tolerance = 0;
  double ground_y = 0;
  std::vector<std::vector<int>> adjacency;

  int ground() const { return leaf_count; }
  bool connected(int a, int b) const {
    const auto& n = adjacency.at(a);
    return std::find(n.begin(), n.end(), b) != n.end();
  }
};

struct Point2 {
  double x = 0, y = 0;
};

struct StabilityReport {
  bool rooted = false;
  bool stable = false;
  // Worst component: its footprint hull (x, z), CoM projection and margin.
  std::vector<Point2> support_polygon;
  Point2 com;
  double margin = 0;           // signed distance of the CoM inside the hull (negative outside)
  double required_margin = 0;  // 2% of the footprint diameter
  int components = 0;
};

inline constexpr double kContactFraction = 0.02;

inline double shape_diagonal(const std::vector<Cuboid>& leaves) {
  Vec3d lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
  for (const auto& c : leaves)
    for (const auto& p : corners(c))
      for (int i = 0; i < 3; ++i) {
        lo[i] = std::min(lo[i], p[i]);
        hi[i] = std::max(hi[i], p[i]);
      }
  return norm(hi - lo);
}

inline double min_y(const Cuboid& c) {
  double y = 1e300;
  for (const auto& p : corners(c)) y = std::min(y, p.y);
  return y;
}

// Edge iff surface distance <= tolerance (closed); a leaf touches the ground
// when its lowest corner is within tolerance of the shape's minimum y.
inline ConnectivityGraph connectivity_graph(const std::vector<Cuboid>& leaves, double tolerance = -1) {
  if (leaves.empty()) throw std::invalid_argument("connectivity_graph: no leaf cuboids");
  ConnectivityGraph g;
  g.leaf_count = static_cast<int>(leaves.size());
  g.tolerance = tolerance >= 0 ? tolerance : kContactFraction * shape_diagonal(leaves);
  g.adjacency.assign(leaves.size() + 1, {});
  g.ground_y = 1e300;
  for (const auto& c : leaves) g.ground_y = std::min(g.ground_y, min_y(c));
  for (int i = 0; i < g.leaf_count; ++i) {
    for (int j = i + 1; j < g.leaf_count; ++j) {
      if (cuboid_distance(leaves[i], leaves[j]) <= g.tolerance) {
        g.adjacency[i].push_back(j);
        g.adjacency[j].push_back(i);
      }
    }
    if (min_y(leaves[i]) - g.ground_y <= g.tolerance) {
      g.adjacency[i].push_back(g.ground());
      g.adjacency[g.ground()].push_back(i);
    }
  }
  return g;
}

inline std::vector<bool> reachable_from(const ConnectivityGraph& g, int start) {
  std::vector<bool> seen(g.adjacency.size(), false);
  std::vector<int> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    const int n = stack.back();
    stack.pop_back();
    for (int m : g.adjacency[n])
      if (!seen[m]) {
        seen[m] = true;
        stack.push_back(m);
      }
  }
  return seen;
}

inline bool rootedness(const ConnectivityGraph& g) {
  const auto seen = reachable_from(g, g.ground());
  for (int i = 0; i < g.leaf_count; ++i)
    if (!seen[i]) return false;
  return true;
}

inline bool rootedness(const std::vector<Cuboid>& leaves) { return rootedness(connectivity_graph(leaves)); }

namespace detail {

inline double cross2(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace detail

// Andrew's monotone chain; counter-clockwise, collinear points dropped.
inline std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) { return a.x == b.x && a.y == b.y; }),
            pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && detail::cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && detail::cross2(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

// Signed distance from p to the boundary of a CCW convex polygon, positive
// inside. Polygons with fewer than three vertices have no interior.
inline double hull_margin(const std::vector<Point2>& hull, const Point2& p) {
  if (hull.size() < 3) {
    double d = 1e300;
    for (std::size_t i = 0; i < hull.size(); ++i) {
      const Point2& a = hull[i];
      const Point2& b = hull[(i + 1) % hull.size()];
      const double ex = b.x - a.x, ey = b.y - a.y;
      const double len2 = ex * ex + ey * ey;
      double t = len2 > 0 ? ((p.x - a.x) * ex + (p.y - a.y) * ey) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      d = std::min(d, std::hypot(p.x - a.x - t * ex, p.y - a.y - t * ey));
    }
    return hull.empty() ? -1e300 : -d;
  }
  double inside = 1e300;
  double outside = 0;
  bool out = false;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point2& a = hull[i];
    const Point2& b = hull[(i + 1) % hull.size()];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const double s = detail::cross2(a, b, p) / len;  // > 0 on the inner side
    inside = std::min(inside, s);
    if (s < 0) out = true;
  }
  if (!out) return inside;
  // Outside: exact distance to the nearest edge segment.
  outside = 1e300;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point2& a = hull[i];
    const Point2& b = hull[(i + 1) % hull.size()];
    const double ex = b.x - a.x, ey = b.y - a.y;
    const double t = std::clamp(((p.x - a.x) * ex + (p.y - a.y) * ey) / (ex * ex + ey * ey), 0.0, 1.0);
    outside = std::min(outside, std::hypot(p.x - a.x - t * ex, p.y - a.y - t * ey));
  }
  return -outside;
}

inline double polygon_diameter(const std::vector<Point2>& pts) {
  double d = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y));
  return d;
}

inline double cuboid_volume(const Cuboid& c) { return c.dims.x * c.dims.y * c.dims.z; }

// Components are the connected pieces of the leaf-only contact graph. Each
// needs its volume-weighted centre of mass strictly inside the hull of the
// corners lying within tolerance of the ground, by at least 2% of the hull's
// diameter. Vertical axis is +y; the footprint lives in (x, z).
inline StabilityReport stability(const std::vector<Cuboid>& leaves) {
  StabilityReport rep;
  const ConnectivityGraph g = connectivity_graph(leaves);
  rep.rooted = rootedness(g);
  std::vector<int> comp(leaves.size(), -1);
  int n_comp = 0;
  for (int s = 0; s < g.leaf_count; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<int> stack{s};
    comp[s] = n_comp;
    while (!stack.empty()) {
      const int n = stack.back();
      stack.pop_back();
      for (int m : g.adjacency[n])
        if (m < g.leaf_count && comp[m] < 0) {
          comp[m] = n_comp;
          stack.push_back(m);
        }
    }
    ++n_comp;
  }
  rep.components = n_comp;
  bool all_ok = true;
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n_comp; ++k) {
    std::vector<Point2> foot;
    double mass = 0;
    Point2 com;
    for (int i = 0; i < g.leaf_count; ++i) {
      if (comp[i] != k) continue;
      const double m = cuboid_volume(leaves[i]);
      mass += m;
      com.x += m * leaves[i].pose.center.x;
      com.y += m * leaves[i].pose.center.z;
      for (const auto& p : corners(leaves[i]))
        if (p.y - g.ground_y <= g.tolerance) foot.push_back({p.x, p.z});
    }
    if (mass > 0) {
      com.x /= mass;
      com.y /= mass;
    }
    const auto hull = convex_hull(foot);
    const double margin = hull_margin(hull, com);
    const double required = kContactFraction * polygon_diameter(hull);
    const bool ok = hull.size() >= 3 && margin > 0 && margin >= required;
    all_ok = all_ok && ok;
    // Report the component with the smallest slack.
    const double slack = margin - required;
    if (slack < worst) {
      worst = slack;
      rep.support_polygon = hull;
      rep.com = com;
      rep.margin = margin;
      rep.required_margin = required;
    }
  }
  rep.stable = rep.rooted && all_ok;
  return rep;
}

struct QualitySummary {
  int count = 0;
  double pct_rooted = 0;
  double pct_stable = 0;
};

inline QualitySummary quality_suite(const std::vector<std::vector<Cuboid>>& shapes) {
  if (shapes.empty()) throw std::invalid_argument("quality_suite: empty shape list");
  QualitySummary q;
  q.count = static_cast<int>(shapes.size());
  int rooted = 0, stable = 0;
  for (const auto& s : shapes) {
    const StabilityReport r = stability(s);
    rooted += r.rooted ? 1 : 0;
    stable += r.stable ? 1 : 0;
  }
  q.pct_rooted = 100.0 * rooted / q.count;
  q.pct_stable = 100.0 * stable / q.count;
  return q;
}

}  // namespace shapeasm
