#pragma once

// Part graph -> program. Each graph node becomes one (sub-)program whose bbox
// is the node's box; its children become cuboids. Regularisation (shortening,
// semantic flattening) runs first, then per level: attachment detection,
// symmetry groups, squeezes, and a grounded attach order chosen by how well
// the executed candidate reproduces the input boxes.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "shapeasm/interpreter.hpp"
#include "shapeasm/part_graph.hpp"
#include "shapeasm/point_cloud.hpp"
#include "shapeasm/program_tools.hpp"

namespace shapeasm {

struct MoveRule {
  std::vector<std::string> labels;
  std::string into;
};

struct ExtractionRules {
  std::vector<std::string> flatten;
  std::vector<std::string> collapse;
  std::vector<MoveRule> moves;
  std::vector<std::string> label_priority;
};

struct ExtractionConfig {
  double fscore_min = 75.0;
  int max_leaf_cuboids = 12;
  double align_angle_deg = 5.0;
  double symmetry_length_frac = 0.02;  // of the level diagonal
  double symmetry_angle_deg = 5.0;
  double face_center_snap = 0.1;
  double bbox_band = 0.05;
  int max_orders = 64;
  bool symmetries = true;
  bool squeezes = true;
  ExtractionRules rules;
};

enum class BBoxTag { None, Top, Bottom };

struct AttachmentRecord {
  int a = -1;
  int b = -1;  // -1: the bounding volume
  Vec3d pa, pb;
  bool face_to_face = false;
  bool face_center = false;  // either point snapped to (or lies on) a face centre
  BBoxTag bbox = BBoxTag::None;
  Vec3d world;  // candidate point before face-centre snapping
  double residual = 0;  // world gap between the two recorded points
};

enum class SymmetryKind { Reflect, Translate };

struct SymmetryGroup {
  SymmetryKind kind = SymmetryKind::Reflect;
  Axis axis = Axis::X;
  int representative = -1;
  std::vector<int> members;  // representative first
  int m = 1;
  double d = 0;
};

struct SqueezeRecord {
  int c1 = -1, c2 = -1, c3 = -1;
  Face face = Face::Left;
  double u = 0.5, v = 0.5;
};

struct ValidationReport {
  double fscore = 0;
  double threshold = 0;
  int components = 0;
  int leaf_count = 0;
  bool in_bounds = true;
  bool executed = true;
  bool pass = false;
  std::vector<std::string> reasons;
};

struct ExtractionResult {
  Program program;
  ValidationReport report;
  std::vector<std::string> log;
};

// ---------------------------------------------------------------- frames

inline Cuboid to_frame(const Cuboid& frame, const Cuboid& box) {
  Cuboid out = box;
  out.pose.center = frame.pose.rotation.transpose_mul(box.pose.center - frame.pose.center);
  out.pose.rotation = frame.pose.rotation.transposed() * box.pose.rotation;
  return out;
}

inline Cuboid from_frame(const Cuboid& frame, const Cuboid& box) {
  Cuboid out = box;
  out.pose.center = frame.pose.center + frame.pose.rotation * box.pose.center;
  out.pose.rotation = frame.pose.rotation * box.pose.rotation;
  return out;
}

inline double rotation_angle(const Mat3d& r) {
  const double c = (r(0, 0) + r(1, 1) + r(2, 2) - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

// Relabels the box axes (proper signed permutation) so its rotation is as
// close to identity as possible; within `align_deg` the rotation snaps to
// identity and the box is marked aligned.
inline Cuboid canonicalize_box(const Cuboid& box, double align_deg) {
  static constexpr int kPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  static constexpr int kPermSign[6] = {1, -1, -1, 1, 1, -1};
  const Mat3d& r = box.pose.rotation;
  double best = -1e300;
  int bp = 0, bs = 0;
  for (int p = 0; p < 6; ++p) {
    for (int s = 0; s < 8; ++s) {
      int sign = kPermSign[p];
      double trace = 0;
      for (int j = 0; j < 3; ++j) {
        const double sj = (s >> j) & 1 ? -1.0 : 1.0;
        sign *= sj < 0 ? -1 : 1;
        trace += sj * r(j, kPerms[p][j]);
      }
      if (sign != 1) continue;
      if (trace > best + 1e-12) {
        best = trace;
        bp = p;
        bs = s;
      }
    }
  }
  Cuboid out = box;
  for (int j = 0; j < 3; ++j) {
    const double sj = (bs >> j) & 1 ? -1.0 : 1.0;
    out.pose.rotation.col[j] = r.col[kPerms[bp][j]] * sj;
    out.dims[j] = box.dims[kPerms[bp][j]];
  }
  out.aligned = rotation_angle(out.pose.rotation) <= align_deg * std::numbers::pi / 180.0;
  if (out.aligned) out.pose.rotation = Mat3d::identity();
  return out;
}

// ---------------------------------------------------------------- regularisation

namespace detail {

inline void leaf_pointers(PartNode& n, std::vector<PartNode*>& out) {
  if (n.is_leaf()) {
    out.push_back(&n);
    return;
  }
  for (auto& c : n.children) leaf_pointers(c, out);
}

// Largest t such that p + t*d stays inside the closed box c (p inside).
inline double exit_distance(const Vec3d& p, const Vec3d& d, const Cuboid& c) {
  const Vec3d q = world_to_local(c, p);
  const Vec3d r = c.pose.rotation.transpose_mul(d);
  double t = 1e300;
  for (int j = 0; j < 3; ++j) {
    const double rj = r[j] / c.dims[j];
    if (rj > 1e-15) t = std::min(t, (1.0 - q[j]) / rj);
    else if (rj < -1e-15) t = std::min(t, -q[j] / rj);
  }
  return std::max(t, 0.0);
}

}  // namespace detail

// Pulls back every leaf face that lies entirely inside another leaf, as far
// as the removed slab stays hidden inside that leaf.
inline PartNode shorten_parts(PartNode g) {
  std::vector<PartNode*> leaves;
  if (g.is_leaf()) return g;
  for (auto& c : g.children) detail::leaf_pointers(c, leaves);
  constexpr double kEps = 1e-9;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    for (int f = 0; f < 6; ++f) {
      Cuboid& a = leaves[i]->box;
      const Face face = static_cast<Face>(f);
      const int ax = face_axis(face);
      const Vec3d inward = a.pose.rotation.col[ax] * (face_side(face) == 1 ? -1.0 : 1.0);
      std::array<Vec3d, 4> pts;
      const auto uv = face_uv_axes(ax);
      for (int k = 0; k < 4; ++k) {
        Vec3d l{0.5, 0.5, 0.5};
        l[ax] = face_side(face);
        l[uv[0]] = k & 1;
        l[uv[1]] = (k >> 1) & 1;
        pts[k] = local_to_world_affine(a, l);
      }
      double best = 0;
      for (std::size_t j = 0; j < leaves.size(); ++j) {
        if (j == i) continue;
        const Cuboid& b = leaves[j]->box;
        bool inside = true;
        for (const auto& p : pts) inside = inside && point_in_cuboid(p, b, 0.0);
        if (!inside) continue;
        double t = 1e300;
        for (const auto& p : pts) t = std::min(t, detail::exit_distance(p, inward, b));
        if (t < a.dims[ax] - kEps) best = std::max(best, t);
      }
      if (best > kEps) {
        a.dims[ax] -= best;
        a.pose.center += inward * (0.5 * best);
      }
    }
  }
  return g;
}

namespace detail {

inline bool has_label(const std::vector<std::string>& list, const std::string& label) {
  return std::find(list.begin(), list.end(), label) != list.end();
}

inline void grow_to_contain(Cuboid& box, const Cuboid& other) {
  Vec3d lo{0, 0, 0}, hi{1, 1, 1};
  for (const auto& p : corners(other)) {
    const Vec3d l = world_to_local(box, p);
    for (int k = 0; k < 3; ++k) {
      lo[k] = std::min(lo[k], l[k]);
      hi[k] = std::max(hi[k], l[k]);
    }
  }
  const Vec3d mid = (lo + hi) * 0.5;
  box.pose.center = local_to_world_affine(box, mid);
  for (int k = 0; k < 3; ++k) box.dims[k] *= hi[k] - lo[k];
}

}  // namespace detail

// Collapses listed nodes to leaves, applies moves, then flattens listed nodes
// so that all their leaf descendants become their direct children.
inline PartNode flatten_hierarchy(PartNode g, const ExtractionRules& rules) {
  std::function<void(PartNode&)> visit = [&](PartNode& n) {
    if (!n.is_leaf() && detail::has_label(rules.collapse, n.label)) n.children.clear();
    for (const auto& mv : rules.moves) {
      auto target = std::find_if(n.children.begin(), n.children.end(), [&](const PartNode& c) { return c.label == mv.into; });
      if (target == n.children.end()) continue;
      std::vector<PartNode> keep, moved;
      for (auto& c : n.children) {
        if (c.label != mv.into && detail::has_label(mv.labels, c.label)) moved.push_back(std::move(c));
        else keep.push_back(std::move(c));
      }
      n.children = std::move(keep);
      auto into = std::find_if(n.children.begin(), n.children.end(), [&](const PartNode& c) { return c.label == mv.into; });
      for (auto& m : moved) {
        detail::grow_to_contain(into->box, m.box);
        if (into->is_leaf()) {
          // A leaf frame keeps its own geometry as a child.
          PartNode self = *into;
          self.id += "/self";
          into->children.push_back(std::move(self));
        }
        into->children.push_back(std::move(m));
      }
    }
    for (auto& c : n.children) visit(c);
    if (!n.is_leaf() && detail::has_label(rules.flatten, n.label)) {
      std::vector<PartNode*> leaves;
      for (auto& c : n.children) detail::leaf_pointers(c, leaves);
      std::vector<PartNode> flat;
      for (PartNode* l : leaves) flat.push_back(*l);
      n.children = std::move(flat);
    }
  };
  visit(g);
  return g;
}

// ---------------------------------------------------------------- attachments

namespace detail {

inline Vec3d clamp01(Vec3d p) {
  for (int i = 0; i < 3; ++i) p[i] = std::clamp(p[i], 0.0, 1.0);
  return p;
}

inline double max_dim(const Cuboid& c) { return std::max({c.dims.x, c.dims.y, c.dims.z}); }

inline std::pair<Face, double> nearest_face_center(const Vec3d& p) {
  Face best = Face::Right;
  double d = 1e300;
  for (int f = 0; f < 6; ++f) {
    const Face face = static_cast<Face>(f);
    const double e = norm(p - face_point(face, 0.5, 0.5));
    if (e < d) {
      d = e;
      best = face;
    }
  }
  return {best, d};
}

inline bool is_face_center(const Vec3d& p) { return nearest_face_center(p).second <= 1e-9; }

struct PartGrid {
  std::vector<Vec3d> points;
  std::optional<PointGrid> grid;
};

inline PartGrid make_part_grid(const Cuboid& c) {
  PartGrid g;
  g.points = sample_volume_grid(c, 20).points;
  g.grid.emplace(g.points);
  return g;
}

inline Vec3d face_normal(const Cuboid& c, Face f) {
  return c.pose.rotation.col[face_axis(f)] * (face_side(f) == 1 ? 1.0 : -1.0);
}

inline Vec3d face_center_world(const Cuboid& c, Face f) { return local_to_world_affine(c, face_point(f, 0.5, 0.5)); }

inline std::optional<AttachmentRecord> detect_pair(const Cuboid& A, const PartGrid& ga, const Cuboid& B, const PartGrid& gb,
                                                   double snap) {
  const double t = std::max(max_dim(A), max_dim(B)) / 20.0;
  if (cuboid_distance(A, B) > t) return std::nullopt;
  // Grid points lie inside their cuboid, so the solid distance is a lower
  // bound that rejects most queries before the grid lookup.
  std::vector<Vec3d> near;
  auto collect = [&](const PartGrid& from, const Cuboid& other, const PartGrid& to) {
    for (const auto& p : from.points) {
      if (point_cuboid_distance(p, other) > t) continue;
      if (std::sqrt(to.grid->nearest(p).dist2) <= t) near.push_back(p);
    }
  };
  collect(ga, B, gb);
  collect(gb, A, ga);
  if (near.empty()) return std::nullopt;

  auto [lo, hi] = bounds(near);
  for (int k = 0; k < 3; ++k) {
    lo[k] -= 0.5 * t;
    hi[k] += 0.5 * t;
  }
  constexpr int kN = 50;
  std::vector<Vec3d> cand;
  for (int i = 0; i < kN; ++i)
    for (int j = 0; j < kN; ++j)
      for (int k = 0; k < kN; ++k) {
        const Vec3d p{lo.x + (i + 0.5) / kN * (hi.x - lo.x), lo.y + (j + 0.5) / kN * (hi.y - lo.y),
                      lo.z + (k + 0.5) / kN * (hi.z - lo.z)};
        if (point_cuboid_distance(p, A) <= 0.5 * t && point_cuboid_distance(p, B) <= 0.5 * t) cand.push_back(p);
      }
  if (cand.empty()) return std::nullopt;

  // Face-to-face: antiparallel faces whose planes are within t.
  const double cos5 = std::cos(5.0 * std::numbers::pi / 180.0);
  int best_n = 0;
  Face best_fa = Face::Right, best_fb = Face::Right;
  Vec3d best_sum{0, 0, 0};
  for (int fa = 0; fa < 6; ++fa) {
    const Face FA = static_cast<Face>(fa);
    const Vec3d na = face_normal(A, FA);
    const Vec3d ca = face_center_world(A, FA);
    for (int fb = 0; fb < 6; ++fb) {
      const Face FB = static_cast<Face>(fb);
      const Vec3d nb = face_normal(B, FB);
      if (dot(na, nb) > -cos5) continue;
      const Vec3d cb = face_center_world(B, FB);
      if (std::abs(dot(cb - ca, na)) > t) continue;
      int n = 0;
      Vec3d sum{0, 0, 0};
      for (const auto& p : cand) {
        if (std::abs(dot(p - ca, na)) <= 0.5 * t && std::abs(dot(p - cb, nb)) <= 0.5 * t) {
          ++n;
          sum += p;
        }
      }
      if (n > best_n) {
        best_n = n;
        best_fa = FA;
        best_fb = FB;
        best_sum = sum;
      }
    }
  }
  AttachmentRecord rec;
  Vec3d P{0, 0, 0};
  if (best_n > 0) {
    rec.face_to_face = true;
    P = best_sum / static_cast<double>(best_n);
  } else {
    for (const auto& p : cand) P += p;
    P = P / static_cast<double>(cand.size());
  }
  for (int it = 0; it < 8; ++it) {
    P = local_to_world_affine(A, clamp01(world_to_local(A, P)));
    P = local_to_world_affine(B, clamp01(world_to_local(B, P)));
  }
  rec.world = P;
  rec.pa = clamp01(world_to_local(A, P));
  rec.pb = clamp01(world_to_local(B, P));
  auto force_faces = [&] {
    if (!rec.face_to_face) return;
    rec.pa[face_axis(best_fa)] = face_side(best_fa);
    rec.pb[face_axis(best_fb)] = face_side(best_fb);
  };
  force_faces();

  // Snap to a face centre on whichever side is closer, if the other cuboid
  // still contains the snapped point (within t/2).
  auto try_snap = [&](const Cuboid& X, Vec3d& px, const Cuboid& Y, Vec3d& py, std::optional<Face> only) {
    auto [f, d] = nearest_face_center(px);
    if (only) {
      f = *only;
      d = norm(px - face_point(f, 0.5, 0.5));
    }
    if (d > snap) return false;
    const Vec3d c = face_point(f, 0.5, 0.5);
    const Vec3d W = local_to_world_affine(X, c);
    if (point_cuboid_distance(W, Y) > 0.5 * t) return false;
    px = c;
    py = clamp01(world_to_local(Y, W));
    return true;
  };
  const std::optional<Face> fa_only = rec.face_to_face ? std::optional<Face>(best_fa) : std::nullopt;
  const std::optional<Face> fb_only = rec.face_to_face ? std::optional<Face>(best_fb) : std::nullopt;
  const double da_c = fa_only ? norm(rec.pa - face_point(*fa_only, 0.5, 0.5)) : nearest_face_center(rec.pa).second;
  const double db_c = fb_only ? norm(rec.pb - face_point(*fb_only, 0.5, 0.5)) : nearest_face_center(rec.pb).second;
  bool snapped = false;
  if (da_c <= db_c) {
    snapped = try_snap(A, rec.pa, B, rec.pb, fa_only) || try_snap(B, rec.pb, A, rec.pa, fb_only);
  } else {
    snapped = try_snap(B, rec.pb, A, rec.pa, fb_only) || try_snap(A, rec.pa, B, rec.pb, fa_only);
  }
  if (snapped) force_faces();
  rec.face_center = is_face_center(rec.pa) || is_face_center(rec.pb);
  rec.residual = norm(local_to_world_affine(A, rec.pa) - local_to_world_affine(B, rec.pb));
  return rec;
}

// Contact with the bottom or top band of the level's bbox (at the origin).
inline std::optional<AttachmentRecord> detect_bbox_band(const Cuboid& X, const PartGrid& gx, const Vec3d& bbox_dims,
                                                        bool top, double band, double snap) {
  Vec3d sum{0, 0, 0};
  int n = 0;
  for (const auto& p : gx.points) {
    const double y = p.y / bbox_dims.y + 0.5;
    if (top ? y >= 1.0 - band : y <= band) {
      sum += p;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  const Vec3d P = sum / static_cast<double>(n);
  // The cuboid face pointing most directly at the bbox face.
  Face face = Face::Right;
  double best = -1e300;
  for (int f = 0; f < 6; ++f) {
    const double s = face_normal(X, static_cast<Face>(f)).y * (top ? 1.0 : -1.0);
    if (s > best + 1e-12) {
      best = s;
      face = static_cast<Face>(f);
    }
  }
  AttachmentRecord rec;
  rec.world = P;
  rec.bbox = top ? BBoxTag::Top : BBoxTag::Bottom;
  rec.pa = clamp01(world_to_local(X, P));
  rec.pa[face_axis(face)] = face_side(face);
  if (norm(rec.pa - face_point(face, 0.5, 0.5)) <= snap) rec.pa = face_point(face, 0.5, 0.5);
  Cuboid bb;
  bb.dims = bbox_dims;
  rec.pb = clamp01(world_to_local(bb, local_to_world_affine(X, rec.pa)));
  rec.pb.y = top ? 1.0 : 0.0;
  rec.face_to_face = true;
  rec.face_center = is_face_center(rec.pa);
  rec.residual = norm(local_to_world_affine(X, rec.pa) - local_to_world_affine(bb, rec.pb));
  return rec;
}

}  // namespace detail

struct DetectOptions {
  double face_center_snap = 0.1;
  double bbox_band = 0.05;
};

// Pairwise contacts among sibling boxes, plus top/bottom contacts with the
// bbox when its dims are given (boxes are then expressed in the bbox frame).
inline std::vector<AttachmentRecord> detect_attachments(const std::vector<Cuboid>& parts,
                                                        const std::optional<Vec3d>& bbox_dims = std::nullopt,
                                                        const DetectOptions& opt = {}) {
  std::vector<detail::PartGrid> grids;
  grids.reserve(parts.size());
  for (const auto& c : parts) grids.push_back(detail::make_part_grid(c));
  std::vector<AttachmentRecord> out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (bbox_dims) {
      for (bool top : {false, true}) {
        if (auto r = detail::detect_bbox_band(parts[i], grids[i], *bbox_dims, top, opt.bbox_band, opt.face_center_snap)) {
          r->a = static_cast<int>(i);
          r->b = -1;
          out.push_back(*r);
        }
      }
    }
    for (std::size_t j = i + 1; j < parts.size(); ++j) {
      if (auto r = detail::detect_pair(parts[i], grids[i], parts[j], grids[j], opt.face_center_snap)) {
        r->a = static_cast<int>(i);
        r->b = static_cast<int>(j);
        out.push_back(*r);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------- squeezes

// A cuboid whose only two contacts are at the centres of opposite faces,
// touching the partners' facing sides at matching (u, v), becomes a squeeze.
// The face operand is always the low side (left, bot, back).
inline std::pair<std::vector<SqueezeRecord>, std::vector<AttachmentRecord>> detect_squeezes(
    const std::vector<AttachmentRecord>& records, const std::vector<Cuboid>& parts) {
  constexpr double kUvTol = 0.05;
  constexpr double kFaceTol = 1e-6;
  std::vector<SqueezeRecord> found;
  std::vector<bool> used(records.size(), false);
  for (std::size_t c = 0; c < parts.size(); ++c) {
    std::vector<int> mine;
    for (std::size_t r = 0; r < records.size(); ++r)
      if (!used[r] && (records[r].a == static_cast<int>(c) || records[r].b == static_cast<int>(c))) mine.push_back(static_cast<int>(r));
    if (mine.size() != 2) continue;
    struct Side {
      int partner;
      Vec3d own, other;
    };
    std::array<Side, 2> s;
    bool ok = true;
    for (int k = 0; k < 2; ++k) {
      const auto& rec = records[mine[k]];
      if (rec.b < 0) ok = false;
      const bool is_a = rec.a == static_cast<int>(c);
      s[k] = {is_a ? rec.b : rec.a, is_a ? rec.pa : rec.pb, is_a ? rec.pb : rec.pa};
    }
    if (!ok || s[0].partner == s[1].partner) continue;
    auto [f0, d0] = detail::nearest_face_center(s[0].own);
    auto [f1, d1] = detail::nearest_face_center(s[1].own);
    if (d0 > 1e-9 || d1 > 1e-9 || f1 != opposite(f0)) continue;
    // Low face first.
    if (face_side(f0) == 1) {
      std::swap(s[0], s[1]);
      std::swap(f0, f1);
    }
    const int ax = face_axis(f0);
    const auto uv = face_uv_axes(ax);
    // c2 touches with its opposite(f) face, c3 with its f face.
    if (std::abs(s[0].other[ax] - 1.0) > kFaceTol || std::abs(s[1].other[ax]) > kFaceTol) continue;
    const double u2 = s[0].other[uv[0]], v2 = s[0].other[uv[1]];
    const double u3 = s[1].other[uv[0]], v3 = s[1].other[uv[1]];
    if (std::abs(u2 - u3) > kUvTol || std::abs(v2 - v3) > kUvTol) continue;
    found.push_back({static_cast<int>(c), s[0].partner, s[1].partner, f0, 0.5 * (u2 + u3), 0.5 * (v2 + v3)});
    used[mine[0]] = used[mine[1]] = true;
  }
  std::vector<AttachmentRecord> rest;
  for (std::size_t r = 0; r < records.size(); ++r)
    if (!used[r]) rest.push_back(records[r]);
  return {found, rest};
}

// ---------------------------------------------------------------- symmetry

struct SymmetryTolerance {
  double length = 0.02;
  double angle_deg = 5.0;
};

inline bool boxes_match(const Cuboid& a, const Cuboid& b, const SymmetryTolerance& tol) {
  if (norm(a.pose.center - b.pose.center) > tol.length) return false;
  const double c = std::cos(tol.angle_deg * std::numbers::pi / 180.0);
  std::array<bool, 3> taken{false, false, false};
  for (int i = 0; i < 3; ++i) {
    bool hit = false;
    for (int j = 0; j < 3 && !hit; ++j) {
      if (taken[j]) continue;
      if (std::abs(dot(a.pose.rotation.col[i], b.pose.rotation.col[j])) >= c &&
          std::abs(a.dims[i] - b.dims[j]) <= tol.length) {
        taken[j] = true;
        hit = true;
      }
    }
    if (!hit) return false;
  }
  return true;
}

// Box mirrored across the plane through the origin normal to `axis`. The
// axes stay a right-handed frame (a box is its own mirror about its centre).
inline Cuboid mirror_box(const Cuboid& c, int axis) {
  Cuboid out = c;
  out.pose.center[axis] = -out.pose.center[axis];
  for (int j = 0; j < 3; ++j) out.pose.rotation.col[j][axis] = -out.pose.rotation.col[j][axis];
  out.pose.rotation.col[2] = cross(out.pose.rotation.col[0], out.pose.rotation.col[1]);
  return out;
}

inline Vec3d mirror_point(Vec3d p, int axis) {
  p[axis] = -p[axis];
  return p;
}

namespace detail {

// Partner key: cuboid index, or -1 (bbox bottom) / -2 (bbox top).
inline int partner_key(const AttachmentRecord& r, int self) {
  if (r.b < 0) return r.bbox == BBoxTag::Top ? -2 : -1;
  return r.a == self ? r.b : r.a;
}

struct Contact {
  int partner;
  Vec3d point;  // world (level frame) contact point on `self`
};

inline std::vector<Contact> contacts_of(const std::vector<AttachmentRecord>& recs, const std::vector<Cuboid>& parts, int self) {
  std::vector<Contact> out;
  for (const auto& r : recs) {
    if (r.a != self && r.b != self) continue;
    const Vec3d own = r.a == self ? r.pa : r.pb;
    out.push_back({partner_key(r, self), local_to_world_affine(parts[self], own)});
  }
  return out;
}

inline std::set<int> partner_set(const std::vector<Contact>& cs) {
  std::set<int> s;
  for (const auto& c : cs) s.insert(c.partner);
  return s;
}

// Every contact of i maps (via `map`) onto a contact of j with the same partner.
template <class Map>
bool contacts_correspond(const std::vector<Contact>& ci, const std::vector<Contact>& cj, Map&& map, double tol) {
  if (ci.size() != cj.size()) return false;
  for (const auto& a : ci) {
    bool hit = false;
    for (const auto& b : cj) hit = hit || (a.partner == b.partner && norm(map(a.point) - b.point) <= tol);
    if (!hit) return false;
  }
  return true;
}

}  // namespace detail

// Groups over parts (level frame, bbox centred at the origin). Translation
// groups of three or more come first, then mirror pairs, then translation
// pairs; a part joins at most one group. `order` lists parts in canonical
// order and decides representatives and tie-breaks.
inline std::vector<SymmetryGroup> detect_symmetries(const std::vector<Cuboid>& parts,
                                                    const std::vector<AttachmentRecord>& records, const Vec3d& bbox_dims,
                                                    const SymmetryTolerance& tol, const std::vector<int>& order = {}) {
  const int n = static_cast<int>(parts.size());
  std::vector<int> ord = order;
  if (ord.empty())
    for (int i = 0; i < n; ++i) ord.push_back(i);
  std::vector<std::vector<detail::Contact>> contacts(n);
  for (int i = 0; i < n; ++i) contacts[i] = detail::contacts_of(records, parts, i);
  std::vector<bool> taken(n, false);
  std::vector<SymmetryGroup> out;

  auto translate_ok = [&](int i, int j, int axis, double delta) {
    Cuboid moved = parts[i];
    moved.pose.center[axis] += delta;
    if (!boxes_match(moved, parts[j], tol)) return false;
    if (detail::partner_set(contacts[i]) != detail::partner_set(contacts[j])) return false;
    return detail::contacts_correspond(
        contacts[i], contacts[j], [&](Vec3d p) { p[axis] += delta; return p; }, tol.length);
  };
  auto chains = [&](int min_members, int max_members) {
    for (int axis = 0; axis < 3; ++axis) {
      std::vector<int> by_axis = ord;
      std::stable_sort(by_axis.begin(), by_axis.end(),
                       [&](int a, int b) { return parts[a].pose.center[axis] < parts[b].pose.center[axis] - 1e-9; });
      for (int i : by_axis) {
        if (taken[i]) continue;
        std::vector<int> best;
        double best_delta = 0;
        for (int j : by_axis) {
          if (j == i || taken[j]) continue;
          const double delta = parts[j].pose.center[axis] - parts[i].pose.center[axis];
          if (delta <= tol.length) continue;
          if (!translate_ok(i, j, axis, delta)) continue;
          std::vector<int> chain{i, j};
          for (int k = 2; static_cast<int>(chain.size()) < max_members; ++k) {
            int next = -1;
            for (int q : by_axis) {
              if (taken[q] || std::find(chain.begin(), chain.end(), q) != chain.end()) continue;
              if (translate_ok(i, q, axis, k * delta)) {
                next = q;
                break;
              }
            }
            if (next < 0) break;
            chain.push_back(next);
          }
          if (chain.size() > best.size() || (chain.size() == best.size() && delta < best_delta)) {
            best = chain;
            best_delta = delta;
          }
        }
        if (static_cast<int>(best.size()) < min_members) continue;
        SymmetryGroup g;
        g.kind = SymmetryKind::Translate;
        g.axis = static_cast<Axis>(axis);
        g.representative = i;
        g.members = best;
        g.m = static_cast<int>(best.size()) - 1;
        g.d = std::min(1.0, g.m * best_delta / bbox_dims[axis]);
        for (int q : best) taken[q] = true;
        out.push_back(g);
      }
    }
  };
  chains(3, 1 << 20);
  for (int axis = 0; axis < 3; ++axis) {
    for (int i : ord) {
      if (taken[i]) continue;
      for (int j : ord) {
        if (j == i || taken[j]) continue;
        if (!boxes_match(mirror_box(parts[i], axis), parts[j], tol)) continue;
        if (detail::partner_set(contacts[i]) != detail::partner_set(contacts[j])) continue;
        if (!detail::contacts_correspond(contacts[i], contacts[j], [&](const Vec3d& p) { return mirror_point(p, axis); },
                                         tol.length))
          continue;
        SymmetryGroup g;
        g.kind = SymmetryKind::Reflect;
        g.axis = static_cast<Axis>(axis);
        g.representative = i;
        g.members = {i, j};
        taken[i] = taken[j] = true;
        out.push_back(g);
        break;
      }
    }
  }
  chains(2, 2);
  return out;
}

// ---------------------------------------------------------------- ordering

namespace detail {

struct LevelPart {
  PartNode node;  // world space, box canonicalised
  Cuboid local;   // canonical box in the level frame
  Cuboid raw;     // input box in the level frame
};

struct OrderKey {
  int rank;
  std::string label;
  std::array<long long, 3> c;
  bool operator<(const OrderKey& o) const { return std::tie(rank, label, c) < std::tie(o.rank, o.label, o.c); }
};

inline OrderKey order_key(const LevelPart& p, const std::vector<std::string>& priority) {
  const auto it = std::find(priority.begin(), priority.end(), p.node.label);
  OrderKey k;
  k.rank = it == priority.end() ? static_cast<int>(priority.size()) : static_cast<int>(it - priority.begin());
  k.label = it == priority.end() ? p.node.label : std::string();
  for (int i = 0; i < 3; ++i) k.c[i] = std::llround(p.local.pose.center[i] * 1e6);
  return k;
}

struct LevelPlan {
  Vec3d bbox_dims;
  std::vector<LevelPart> parts;  // canonical order
  std::vector<AttachmentRecord> records;
  std::vector<SymmetryGroup> groups;
  std::vector<SqueezeRecord> squeezes;
  std::vector<bool> removed;  // non-representative symmetry members
};

inline std::string cube_name(int i) { return "cube" + std::to_string(i); }

// Kept parts are named cube0.. in canonical order.
inline std::vector<std::string> part_names(const LevelPlan& plan) {
  std::vector<std::string> names(plan.parts.size());
  int k = 0;
  for (std::size_t i = 0; i < plan.parts.size(); ++i)
    if (!plan.removed[i]) names[i] = cube_name(k++);
  return names;
}

inline bool aligned_partner(const LevelPlan& plan, int partner) { return partner < 0 || plan.parts[partner].local.aligned; }

// Grounding sequences over kept parts, depth first in canonical order, capped.
// A sequence that gets stuck is returned as-is (its tail cannot be grounded).
inline std::vector<std::vector<int>> grounded_orders(const LevelPlan& plan, int cap) {
  const int n = static_cast<int>(plan.parts.size());
  std::vector<int> squeezed(n, -1);
  for (std::size_t s = 0; s < plan.squeezes.size(); ++s) squeezed[plan.squeezes[s].c1] = static_cast<int>(s);
  int kept = 0;
  for (int i = 0; i < n; ++i) kept += plan.removed[i] ? 0 : 1;
  std::vector<std::vector<int>> out;
  std::vector<int> seq;
  std::vector<bool> grounded(n, false);
  auto groundable = [&](int c) {
    if (squeezed[c] >= 0) {
      const auto& s = plan.squeezes[squeezed[c]];
      return grounded[s.c2] && grounded[s.c3];
    }
    for (const auto& r : plan.records) {
      if (r.a == c && (r.b < 0 || grounded[r.b])) return true;
      if (r.b == c && grounded[r.a]) return true;
    }
    return false;
  };
  std::function<void()> rec = [&] {
    if (static_cast<int>(out.size()) >= cap) return;
    if (static_cast<int>(seq.size()) == kept) {
      out.push_back(seq);
      return;
    }
    bool any = false;
    for (int c = 0; c < n; ++c) {
      if (plan.removed[c] || grounded[c] || !groundable(c)) continue;
      any = true;
      seq.push_back(c);
      grounded[c] = true;
      rec();
      grounded[c] = false;
      seq.pop_back();
      if (static_cast<int>(out.size()) >= cap) return;
    }
    if (!any) out.push_back(seq);
  };
  rec();
  return out;
}

inline Program build_level(const LevelPlan& plan, const std::vector<int>& seq) {
  const int n = static_cast<int>(plan.parts.size());
  const auto names = part_names(plan);
  Program p;
  p.bbox = {kBBox, plan.bbox_dims.x, plan.bbox_dims.z, plan.bbox_dims.y, true};
  for (int i = 0; i < n; ++i) {
    if (plan.removed[i]) continue;
    const Cuboid& c = plan.parts[i].local;
    p.cuboids.push_back({names[i], c.dims.x, c.dims.z, c.dims.y, c.aligned});
  }
  std::vector<int> squeezed(n, -1);
  for (std::size_t s = 0; s < plan.squeezes.size(); ++s) squeezed[plan.squeezes[s].c1] = static_cast<int>(s);
  std::vector<bool> grounded(n, false);
  for (int c : seq) {
    if (squeezed[c] >= 0) {
      const auto& s = plan.squeezes[squeezed[c]];
      p.attaches.push_back(Squeeze<double>{names[c], names[s.c2], names[s.c3], s.face, s.u, s.v});
      grounded[c] = true;
      continue;
    }
    struct Item {
      int partner;
      Vec3d own, other;
      bool face_center;
      bool exact;
      double residual;
    };
    std::vector<Item> items;
    const double exact_tol = 1e-6 * norm(plan.bbox_dims);
    for (const auto& r : plan.records) {
      const bool exact = r.residual <= exact_tol;
      if (r.a == c && (r.b < 0 || grounded[r.b])) items.push_back({r.b, r.pa, r.pb, r.face_center, exact, r.residual});
      else if (r.b == c && grounded[r.a]) items.push_back({r.a, r.pb, r.pa, r.face_center, exact, r.residual});
    }
    const bool self_aligned = plan.parts[c].local.aligned;
    // An aligned part is placed by its first attach; inexact extra contacts
    // would only grow it.
    if (self_aligned && std::any_of(items.begin(), items.end(), [](const Item& it) { return it.exact; })) {
      std::erase_if(items, [](const Item& it) { return !it.exact; });
    } else if (self_aligned && !items.empty()) {
      const auto best = std::min_element(items.begin(), items.end(),
                                         [](const Item& x, const Item& y) { return x.residual < y.residual; });
      items = {*best};
    }
    // Contacts that hold exactly in the input go first so the anchoring
    // attach reproduces the part's position.
    std::stable_sort(items.begin(), items.end(), [&](const Item& x, const Item& y) {
      if (x.exact != y.exact) return x.exact;
      if (!x.exact && x.residual != y.residual) return x.residual < y.residual;
      const int ax = !self_aligned && !aligned_partner(plan, x.partner) ? 1 : 0;
      const int ay = !self_aligned && !aligned_partner(plan, y.partner) ? 1 : 0;
      if (ax != ay) return ax < ay;
      if (x.face_center != y.face_center) return x.face_center;
      return x.partner < y.partner;  // bbox (-1) first, then canonical order
    });
    for (const auto& it : items) {
      const std::string& partner = it.partner < 0 ? kBBox : names[it.partner];
      p.attaches.push_back(Attach<double>{names[c], partner, it.own, it.other});
    }
    grounded[c] = true;
  }
  for (const auto& g : plan.groups) {
    const std::string& rep = names[g.representative];
    if (g.kind == SymmetryKind::Reflect) p.symmetries.push_back(Reflect<double>{rep, g.axis});
    else p.symmetries.push_back(Translate<double>{rep, g.axis, g.m, g.d});
  }
  return p;
}

inline std::optional<std::vector<Cuboid>> execute_level(const Program& p) {
  try {
    ExecOptions opt;
    opt.mode = ExecMode::Flat;
    opt.build_expanded = false;
    const auto shape = execute(p, opt);
    if (shape.leaves.empty()) return std::nullopt;
    return shape.leaf_geoms();
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline double level_fit(const Program& p, const PointCloud& target, double threshold) {
  const auto got = execute_level(p);
  if (!got) return -1.0;
  return f_score(sample_surface_lattice(*got, 0.5 * threshold), target, threshold);
}

}  // namespace detail

// ---------------------------------------------------------------- pipeline

namespace detail {

// Wraps mirrored multi-part components (connected through parts that all
// have mirror partners) into their own bounding-box nodes. Returns true when
// something was wrapped.
inline bool wrap_component_symmetries(std::vector<LevelPart>& parts, const Cuboid& frame, const Vec3d& bbox_dims,
                                      const ExtractionConfig& cfg, std::vector<std::string>& log) {
  const int n = static_cast<int>(parts.size());
  if (n < 4) return false;
  std::vector<Cuboid> boxes;
  for (const auto& p : parts) boxes.push_back(p.local);
  const SymmetryTolerance tol{cfg.symmetry_length_frac * norm(bbox_dims), cfg.symmetry_angle_deg};
  const auto records = detect_attachments(boxes, bbox_dims, {cfg.face_center_snap, cfg.bbox_band});
  std::vector<std::set<int>> adj(n);
  for (const auto& r : records)
    if (r.b >= 0) {
      adj[r.a].insert(r.b);
      adj[r.b].insert(r.a);
    }
  for (int axis = 0; axis < 3; ++axis) {
    std::vector<int> mate(n, -1);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n && mate[i] < 0; ++j)
        if (j != i && boxes_match(mirror_box(boxes[i], axis), boxes[j], tol)) mate[i] = j;
    // Components over mate-preserving edges.
    std::vector<int> comp(n, -1);
    int nc = 0;
    for (int s = 0; s < n; ++s) {
      if (mate[s] < 0 || comp[s] >= 0) continue;
      std::vector<int> stack{s};
      comp[s] = nc;
      while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v : adj[u])
          if (mate[v] >= 0 && comp[v] < 0 && adj[mate[u]].count(mate[v])) {
            comp[v] = nc;
            stack.push_back(v);
          }
      }
      ++nc;
    }
    for (int k = 0; k < nc; ++k) {
      std::vector<int> members;
      for (int i = 0; i < n; ++i)
        if (comp[i] == k) members.push_back(i);
      if (members.size() < 2 || static_cast<int>(members.size()) * 2 > n) continue;
      std::vector<int> mirrored;
      for (int i : members) mirrored.push_back(mate[i]);
      std::sort(mirrored.begin(), mirrored.end());
      bool disjoint = true, same_comp = true;
      for (int i : mirrored) {
        disjoint = disjoint && comp[i] != k;
        same_comp = same_comp && comp[i] == comp[mirrored.front()];
      }
      if (!disjoint || !same_comp) continue;
      int other = 0;
      for (int i = 0; i < n; ++i) other += comp[i] == comp[mirrored.front()] ? 1 : 0;
      if (other != static_cast<int>(members.size())) continue;
      // Each wrapper must ground its members through its own top/bottom bands.
      auto wrapper = [&](const std::vector<int>& ids) -> std::optional<LevelPart> {
        Vec3d lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
        for (int i : ids)
          for (const auto& c : corners(boxes[i]))
            for (int a = 0; a < 3; ++a) {
              lo[a] = std::min(lo[a], c[a]);
              hi[a] = std::max(hi[a], c[a]);
            }
        LevelPart w;
        w.local = make_cuboid(hi - lo, (lo + hi) * 0.5, Mat3d::identity(), true);
        w.raw = w.local;
        std::vector<Cuboid> inner;
        for (int i : ids) inner.push_back(to_frame(w.local, boxes[i]));
        const auto recs = detect_attachments(inner, w.local.dims, {cfg.face_center_snap, cfg.bbox_band});
        std::vector<bool> g(ids.size(), false);
        for (bool changed = true; changed;) {
          changed = false;
          for (const auto& r : recs) {
            const bool ga = g[r.a], gb = r.b < 0 || g[r.b];
            if (ga != gb) {
              if (!ga) g[r.a] = true;
              else g[r.b] = true;
              changed = true;
            }
          }
        }
        for (bool x : g)
          if (!x) return std::nullopt;
        w.node.id = parts[ids.front()].node.id + "+group";
        w.node.label = parts[ids.front()].node.label + "_group";
        w.node.box = from_frame(frame, w.local);
        for (int i : ids) w.node.children.push_back(parts[i].node);
        return w;
      };
      auto wa = wrapper(members);
      auto wb = wrapper(mirrored);
      if (!wa || !wb) continue;
      std::vector<LevelPart> next;
      std::set<int> gone(members.begin(), members.end());
      gone.insert(mirrored.begin(), mirrored.end());
      for (int i = 0; i < n; ++i)
        if (!gone.count(i)) next.push_back(parts[i]);
      next.push_back(*wa);
      next.push_back(*wb);
      parts = std::move(next);
      log.push_back("wrapped mirrored components of " + std::to_string(members.size()) + " parts about " +
                    std::string(axis_name(static_cast<Axis>(axis))));
      return true;
    }
  }
  return false;
}

inline Program extract_level(const PartNode& node, const ExtractionConfig& cfg, std::vector<std::string>& log,
                             const std::string& path) {
  const Cuboid& frame = node.box;
  LevelPlan plan;
  plan.bbox_dims = frame.dims;
  std::vector<LevelPart> parts;
  for (const auto& child : node.children) {
    LevelPart lp;
    lp.raw = to_frame(frame, child.box);
    lp.local = canonicalize_box(lp.raw, cfg.align_angle_deg);
    lp.node = child;
    lp.node.box = from_frame(frame, lp.local);
    parts.push_back(std::move(lp));
  }
  if (cfg.symmetries) {
    for (int guard = 0; guard < 4 && wrap_component_symmetries(parts, frame, plan.bbox_dims, cfg, log); ++guard) {
    }
  }
  std::vector<OrderKey> keys;
  for (const auto& p : parts) keys.push_back(order_key(p, cfg.rules.label_priority));
  std::vector<int> idx(parts.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return keys[a] < keys[b]; });
  for (int i : idx) plan.parts.push_back(parts[i]);
  const int n = static_cast<int>(plan.parts.size());
  plan.removed.assign(n, false);

  std::vector<Cuboid> boxes, raw;
  for (const auto& p : plan.parts) {
    boxes.push_back(p.local);
    raw.push_back(p.raw);
  }
  plan.records = detect_attachments(boxes, plan.bbox_dims, {cfg.face_center_snap, cfg.bbox_band});

  const double diag = norm(plan.bbox_dims);
  const double threshold = 0.02 * diag;
  const PointCloud target = raw.empty() ? PointCloud{} : sample_surface_lattice(raw, 0.5 * threshold);
  const SymmetryTolerance tol{cfg.symmetry_length_frac * diag, cfg.symmetry_angle_deg};

  auto rebuild_squeezes = [&] {
    plan.squeezes.clear();
    if (!cfg.squeezes) return;
    std::vector<AttachmentRecord> live;
    for (const auto& r : plan.records)
      if (!plan.removed[r.a] && (r.b < 0 || !plan.removed[r.b])) live.push_back(r);
    plan.squeezes = detect_squeezes(live, boxes).first;
  };
  auto first_program = [&] {
    auto orders = grounded_orders(plan, 1);
    if (orders.empty() || static_cast<int>(orders.front().size()) < std::count(plan.removed.begin(), plan.removed.end(), false)) {
      // A squeezed part may block grounding; fall back to plain attaches.
      plan.squeezes.clear();
      orders = grounded_orders(plan, 1);
    }
    return build_level(plan, orders.empty() ? std::vector<int>{} : orders.front());
  };

  if (cfg.symmetries && n > 1) {
    const auto candidates = detect_symmetries(boxes, plan.records, plan.bbox_dims, tol);
    for (const auto& g : candidates) {
      auto saved = plan.removed;
      for (std::size_t k = 1; k < g.members.size(); ++k) plan.removed[g.members[k]] = true;
      plan.groups.push_back(g);
      rebuild_squeezes();
      bool sound = false;
      if (const auto got = execute_level(first_program())) {
        sound = true;
        for (std::size_t k = 1; k < g.members.size() && sound; ++k) {
          bool hit = false;
          for (const auto& c : *got) hit = hit || boxes_match(c, boxes[g.members[k]], tol);
          sound = hit;
        }
      }
      if (!sound) {
        plan.groups.pop_back();
        plan.removed = saved;
        log.push_back(path + ": dropped unsound " + std::string(g.kind == SymmetryKind::Reflect ? "reflect" : "translate") +
                      " group");
      }
    }
  }
  rebuild_squeezes();
  std::sort(plan.groups.begin(), plan.groups.end(),
            [](const SymmetryGroup& a, const SymmetryGroup& b) { return a.representative < b.representative; });

  auto orders = grounded_orders(plan, cfg.max_orders);
  const int kept = static_cast<int>(std::count(plan.removed.begin(), plan.removed.end(), false));
  if (!orders.empty() && static_cast<int>(orders.front().size()) < kept && !plan.squeezes.empty()) {
    plan.squeezes.clear();
    orders = grounded_orders(plan, cfg.max_orders);
  }
  if (orders.empty() || static_cast<int>(orders.front().size()) < kept) {
    log.push_back(path + ": some parts cannot be grounded");
  }
  Program best = build_level(plan, orders.empty() ? std::vector<int>{} : orders.front());
  if (!raw.empty() && orders.size() > 1) {
    double best_f = detail::level_fit(best, target, threshold);
    for (std::size_t k = 1; k < orders.size() && best_f < 100.0 - 1e-9; ++k) {
      Program cand = build_level(plan, orders[k]);
      const double f = detail::level_fit(cand, target, threshold);
      if (f > best_f + 1e-9) {
        best_f = f;
        best = std::move(cand);
      }
    }
  }

  const auto names = part_names(plan);
  for (int i = 0; i < n; ++i) {
    if (plan.removed[i] || plan.parts[i].node.is_leaf()) continue;
    Program child = extract_level(plan.parts[i].node, cfg, log, path + names[i] + "/");
    child.owner = names[i];
    best.children.push_back(std::move(child));
  }
  return best;
}

}  // namespace detail

// Frame of the emitted root program: the root box with axes relabelled
// closest to the world axes (its rotation is kept exactly).
inline Cuboid program_frame(const PartNode& g) {
  Cuboid c = canonicalize_box(g.box, -1.0);
  c.aligned = true;
  return c;
}

// ---------------------------------------------------------------- validation

namespace detail {

inline int attach_components(const Program& p) {
  std::map<std::string, std::string> parent;
  std::function<std::string(const std::string&)> find = [&](const std::string& x) -> std::string {
    auto& px = parent[x];
    if (px.empty() || px == x) return px = x;
    return px = find(px);
  };
  find(p.bbox.name);
  for (const auto& c : p.cuboids) find(c.name);
  for (const auto& a : expanded_attaches(p)) parent[find(a.c1)] = find(a.c2);
  std::set<std::string> roots;
  for (auto& [k, v] : parent) roots.insert(find(k));
  int worst = static_cast<int>(roots.size());
  for (const auto& child : p.children) worst = std::max(worst, attach_components(child));
  return worst;
}

}  // namespace detail

// F-score against the graph's leaves (in the program frame), attachment
// connectivity per program level, containment and leaf complexity.
inline ValidationReport validate_program(const Program& p, const PartNode& g, const ExtractionConfig& cfg = {}) {
  ValidationReport rep;
  const Cuboid frame = program_frame(g);
  std::vector<Cuboid> truth;
  for (const auto& leaf : leaf_boxes(g)) truth.push_back(to_frame(frame, leaf));
  rep.leaf_count = program_stats(p).leaf_cuboid_count;
  rep.components = detail::attach_components(p);
  Vec3d lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
  for (const auto& c : truth)
    for (const auto& q : corners(c))
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], q[a]);
        hi[a] = std::max(hi[a], q[a]);
      }
  rep.threshold = 0.02 * norm(hi - lo);
  try {
    ExecOptions opt;
    opt.build_expanded = false;
    const auto shape = execute(p, opt);
    rep.in_bounds = !shape.diagnostics.has_warning(rule_name(Rule::Containment));
    if (!shape.leaves.empty() && rep.threshold > 0) {
      const double spacing = 0.5 * rep.threshold;
      rep.fscore = f_score(sample_surface_lattice(shape.leaf_geoms(), spacing), sample_surface_lattice(truth, spacing),
                           rep.threshold);
    }
  } catch (const std::exception&) {
    rep.executed = false;
  }
  if (!rep.executed) rep.reasons.push_back("execution");
  if (rep.fscore < cfg.fscore_min) rep.reasons.push_back("fscore");
  if (rep.components > 1) rep.reasons.push_back("components");
  if (!rep.in_bounds) rep.reasons.push_back("bounds");
  if (rep.leaf_count > cfg.max_leaf_cuboids) rep.reasons.push_back("complexity");
  rep.pass = rep.reasons.empty();
  return rep;
}

// Whole pipeline: shorten, rearrange, extract every level, validate.
inline ExtractionResult extract_program(const PartNode& g, const ExtractionConfig& cfg = {}) {
  ExtractionResult res;
  PartNode work = flatten_hierarchy(shorten_parts(g), cfg.rules);
  work.box = program_frame(g);
  if (work.is_leaf()) {
    // A lone box is its own single part.
    PartNode self = work;
    self.id += "/self";
    work.children.push_back(self);
  }
  res.program = detail::extract_level(work, cfg, res.log, "");
  res.report = validate_program(res.program, g, cfg);
  return res;
}

}  // namespace shapeasm
