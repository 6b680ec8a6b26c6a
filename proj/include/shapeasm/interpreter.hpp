#pragma once

// Imperative executor. Every command takes effect immediately; macros expand
// into Cuboid/attach commands which run on the spot. Each (sub-)program runs
// in its own frame with its bbox centred at the origin, and child leaves are
// then mapped into the owning cuboid.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "shapeasm/printer.hpp"
#include "shapeasm/semantics.hpp"

namespace shapeasm {

class ExecutionError : public std::runtime_error {
 public:
  ExecutionError(Rule rule, const std::string& msg)
      : std::runtime_error(std::string(rule_name(rule)) + ": " + msg), rule_(rule) {}
  Rule rule() const { return rule_; }

 private:
  Rule rule_;
};

enum class ExecMode { Flat, Hierarchical };

struct ExecOptions {
  ExecMode mode = ExecMode::Hierarchical;
  double tau_degrees = 25.0;
  bool record_trace = false;
  bool build_expanded = true;  // also produce the macro-free program for sub-programs
};

// A branch taken on a data-dependent comparison. `margin` is the normalised
// distance of the compared quantity from its switching point; choices that
// differ between nearby parameter values mark a kink.
struct Decision {
  std::string site;
  int choice = 0;
  double margin = 0;
};

struct ExecWarning {
  std::string code;
  std::string path;
  std::string message;
};

struct ExecDiagnostics {
  std::vector<ExecWarning> warnings;
  std::vector<Decision> decisions;

  void warn(std::string code, std::string path, std::string msg) {
    warnings.push_back({std::move(code), std::move(path), std::move(msg)});
  }
  void decide(std::string site, int choice, double margin) {
    decisions.push_back({std::move(site), choice, margin});
  }
  bool has_warning(std::string_view code) const {
    for (const auto& w : warnings)
      if (w.code == code) return true;
    return false;
  }
};

template <class S>
struct AttachEvent {
  Vec3<S> own_local;
  Vec3<S> target_world;
  std::string partner;
  Vec3<S> partner_local;
};

template <class S>
struct CuboidState {
  std::string name;
  CuboidDecl<S> decl;
  CuboidGeom<S> geom;
  std::vector<AttachEvent<S>> history;
  bool grounded = false;
  std::string template_name;  // cuboid whose sub-program this one uses (itself unless a clone)
  int source_line = 0;        // 1-based line in the owning program
};

template <class S>
struct ExecState {
  std::vector<CuboidState<S>> cuboids;  // [0] is the bbox
  double tau = 25.0 * std::numbers::pi / 180.0;
  std::string path;

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < cuboids.size(); ++i)
      if (cuboids[i].name == name) return static_cast<int>(i);
    return -1;
  }
  CuboidState<S>& at(const std::string& name) {
    const int i = index_of(name);
    if (i < 0) throw ExecutionError(Rule::Grounding, "unknown cuboid '" + name + "'");
    return cuboids[i];
  }
  const CuboidState<S>& bbox() const { return cuboids.front(); }
};

template <class S>
struct Leaf {
  CuboidGeom<S> geom;
  std::string path;  // owner chain plus cuboid name, e.g. "cube1/cube0"
  int source_line = 0;
};

struct AttachLogEntry {
  std::string path;
  std::string c1, c2;
  Vec3d point;        // world position of the source point after the attach
  Vec3d target;       // world position of the target point
};

struct TraceStep {
  int step = 0;
  std::string path;
  std::string command;
  std::vector<std::pair<std::string, Cuboid>> cuboids;  // frame of the program being run
};

template <class S>
struct ExecutedShape {
  CuboidGeom<S> bbox;
  std::vector<Leaf<S>> leaves;
  std::vector<Leaf<S>> internal;  // cuboids expanded into sub-programs (hierarchical mode)
  std::vector<AttachLogEntry> attachments;
  ExecDiagnostics diagnostics;
  std::vector<TraceStep> trace;
  BasicProgram<S> expanded;  // macro-free equivalent program, full precision

  std::vector<CuboidGeom<S>> leaf_geoms() const {
    std::vector<CuboidGeom<S>> out;
    for (const auto& l : leaves) out.push_back(l.geom);
    return out;
  }
};

namespace detail {

template <class S>
double pd(const S& x) {
  return static_cast<double>(primal(x));
}

template <class S>
double primal_diag(const CuboidGeom<S>& g) {
  return norm(primal_vec(g.dims));
}

// Rotates g rigidly by r about the world point `pivot`.
template <class S>
void rotate_about(CuboidGeom<S>& g, const Mat3<S>& r, const Vec3<S>& pivot) {
  g.pose.rotation = r * g.pose.rotation;
  g.pose.center = pivot + r * (g.pose.center - pivot);
}

// Scales axis i by `factor` keeping the local point `anchor` fixed in world.
template <class S>
void scale_axis_about(CuboidGeom<S>& g, int i, const S& new_dim, const S& anchor_i) {
  const Vec3<S> u = g.pose.rotation.col[i];
  g.pose.center += u * ((anchor_i - S(0.5)) * (g.dims[i] - new_dim));
  g.dims[i] = new_dim;
}

template <class S>
void attach_first(CuboidGeom<S>& g, const Vec3<S>& p, const Vec3<S>& target) {
  g.pose.center += target - local_to_world_affine(g, p);
}

template <class S>
void attach_second(CuboidState<S>& c, const Vec3<S>& p, const Vec3<S>& target, ExecDiagnostics& diag,
                   const std::string& where) {
  CuboidGeom<S>& g = c.geom;
  const Vec3<S> q = c.history.front().own_local;
  const Vec3<S> w0 = local_to_world_affine(g, q);
  const Vec3<S> a = hadamard(p - q, g.dims);
  const S k2 = squared_norm(a);
  const S n2 = squared_norm(target - w0);
  const double scale = primal_diag(g);
  const double eps2 = 1e-18 * scale * scale;
  if (pd(k2) <= eps2) {
    diag.warn("degenerate-attach", where, "source point coincides with the existing attachment point");
    diag.decide("one-prior.degenerate", 1, 0);
    return;
  }
  if (pd(n2) <= eps2) {
    diag.warn("degenerate-attach", where, "target coincides with the existing attachment point");
    diag.decide("one-prior.degenerate", 2, 0);
    return;
  }
  // The axis whose scaling changes n/k fastest: d(n/k)/d(log s_i) = -n a_i^2 / k^3.
  int axis = 0;
  for (int i = 1; i < 3; ++i)
    if (pd(a[i] * a[i]) > pd(a[axis] * a[axis])) axis = i;
  double second = -1;
  for (int i = 0; i < 3; ++i)
    if (i != axis) second = std::max(second, pd(a[i] * a[i]));
  diag.decide("one-prior.axis", axis, (pd(a[axis] * a[axis]) - second) / pd(k2));

  const S ai2 = a[axis] * a[axis];
  const S r2 = k2 - ai2;
  const double slack = (pd(n2) - pd(r2)) / pd(k2);
  if (slack > 1e-12) {
    // Exact length along the chosen axis: r^2 + lambda^2 a_i^2 = n^2.
    const S lambda = math::sqrt((n2 - r2) / ai2);
    g.dims[axis] = g.dims[axis] * lambda;
    diag.decide("one-prior.feasible", 1, slack);
  } else {
    const S lambda = math::sqrt(n2 / k2);
    g.dims = g.dims * lambda;
    diag.decide("one-prior.feasible", 0, -slack);
    diag.warn("uniform-scale", where, "single-axis scale cannot reach the target; scaled uniformly");
  }
  g.pose.center += w0 - local_to_world_affine(g, q);
  const Vec3<S> s = local_to_world_affine(g, p) - w0;
  const Vec3<S> t = target - w0;
  bool anti = false;
  const Vec3<S> su = normalized(s), tu = normalized(t);
  const Mat3<S> r = rotation_between(su, tu, &anti);
  diag.decide("one-prior.rotation", anti ? 1 : 0, 1.0 + pd(dot(su, tu)));
  rotate_about(g, r, w0);
}

template <class S>
void attach_many(CuboidState<S>& c, const Vec3<S>& p, const Vec3<S>& target, double tau, ExecDiagnostics& diag,
                 const std::string& where) {
  CuboidGeom<S>& g = c.geom;
  const double scale = primal_diag(g);
  std::vector<Vec3<S>> w;
  for (const auto& h : c.history) w.push_back(local_to_world_affine(g, h.own_local));

  // Colinearity of the existing attachment points.
  std::size_t i0 = 0, i1 = 0;
  double far = -1;
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = i + 1; j < w.size(); ++j) {
      const double d = norm(primal_vec(w[i]) - primal_vec(w[j]));
      if (d > far) { far = d; i0 = i; i1 = j; }
    }
  if (far <= 1e-9 * scale) {
    diag.warn("singular-rotation", where, "existing attachment points coincide; rotation skipped");
    diag.decide("many.colinear", 2, 0);
  } else {
    const Vec3d e0 = (primal_vec(w[i1]) - primal_vec(w[i0])) / far;
    double dev = 0;
    for (const auto& wj : w) {
      const Vec3d r = primal_vec(wj) - primal_vec(w[i0]);
      dev = std::max(dev, norm(r - e0 * dot(e0, r)));
    }
    const double limit = 1e-5 * scale;
    const bool colinear = dev <= limit;
    diag.decide("many.colinear", colinear ? 1 : 0, std::abs(dev - limit) / scale);
    if (colinear) {
      const Vec3<S> e = normalized(w[i1] - w[i0]);
      const Vec3<S> s = local_to_world_affine(g, p) - w[i0];
      const Vec3<S> t = target - w[i0];
      const Vec3<S> sp = s - e * dot(e, s);
      const Vec3<S> tp = t - e * dot(e, t);
      if (pd(norm(sp)) <= 1e-9 * scale || pd(norm(tp)) <= 1e-9 * scale) {
        diag.warn("singular-rotation", where, "source or target lies on the axis of colinearity; rotation skipped");
      } else {
        const S angle = math::atan2(dot(e, cross(sp, tp)), dot(sp, tp));
        diag.decide("many.rotation-branch", 0, std::numbers::pi - std::abs(pd(angle)));
        rotate_about(g, axis_angle(e, angle), w[i0]);
      }
    }
  }

  // Scale along the normal of the face holding the source point.
  int axis = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(pd(p[i]) - 0.5) > std::abs(pd(p[axis]) - 0.5)) axis = i;
  const double side = pd(p[axis]) >= 0.5 ? 1.0 : -1.0;
  const Vec3<S> u = g.pose.rotation.col[axis];
  const Vec3<S> src = local_to_world_affine(g, p);
  const Vec3<S> v = target - src;
  const double vn = norm(primal_vec(v));
  if (vn <= 1e-12 * scale) {
    diag.decide("many.tau", 2, 0);
    return;
  }
  const Vec3d n = primal_vec(u) * side;
  const Vec3d vd = primal_vec(v);
  const double angle = std::atan2(norm(cross(n, vd)), dot(n, vd));
  const bool scale_ok = angle < tau;
  diag.decide("many.tau", scale_ok ? 1 : 0, std::abs(angle - tau));
  if (!scale_ok) {
    diag.warn("tau-skip", where,
              "face normal is " + std::to_string(angle * 180.0 / std::numbers::pi) +
                  " degrees from the target; scale skipped, attachment left approximate");
    return;
  }
  S alpha(0.0);
  for (const auto& h : c.history) alpha += h.own_local[axis];
  alpha = alpha / S(static_cast<double>(c.history.size()));
  const S denom = p[axis] - alpha;
  if (std::abs(pd(denom)) < 1e-6) {
    diag.warn("degenerate-scale", where, "existing attachments straddle the source face; scale skipped");
    return;
  }
  const S new_dim = g.dims[axis] + dot(v, u) / denom;
  if (pd(new_dim) < 1e-6) {
    diag.warn("degenerate-scale", where, "scale would collapse the cuboid; skipped");
    return;
  }
  scale_axis_about(g, axis, new_dim, alpha);
}

// Aligned cuboids never rotate; each axis grows just enough that every
// attachment target lies inside the closed box.
template <class S>
void attach_aligned(CuboidState<S>& c, const Vec3<S>& target, ExecDiagnostics& diag) {
  CuboidGeom<S>& g = c.geom;
  std::vector<Vec3<S>> locals;
  for (const auto& h : c.history) locals.push_back(world_to_local(g, h.target_world));
  locals.push_back(world_to_local(g, target));
  Vec3<S> mid;
  Vec3<S> span;
  bool grow = false;
  for (int i = 0; i < 3; ++i) {
    S lo(0.0), hi(1.0);
    double margin = 1e300;
    int mask = 0;
    for (const auto& l : locals) {
      margin = std::min({margin, std::abs(pd(l[i])), std::abs(pd(l[i]) - 1.0)});
      if (pd(l[i]) < pd(lo)) { lo = l[i]; mask |= 1; }
      if (pd(l[i]) > pd(hi)) { hi = l[i]; mask |= 2; }
    }
    diag.decide("aligned.grow", mask, margin);
    grow = grow || mask != 0;
    mid[i] = (lo + hi) * S(0.5);
    span[i] = hi - lo;
  }
  if (!grow) return;
  g.pose.center = local_to_world_affine(g, mid);
  g.dims = hadamard(g.dims, span);
}

}  // namespace detail

template <class S>
void instantiate(ExecState<S>& st, const CuboidDecl<S>& decl, int source_line, const std::string& template_name) {
  if (st.index_of(decl.name) >= 0) throw ExecutionError(Rule::BlockOrder, "duplicate cuboid '" + decl.name + "'");
  CuboidState<S> c;
  c.name = decl.name;
  c.decl = decl;
  c.geom.dims = decl.dims();
  c.geom.aligned = decl.aligned;
  c.geom.pose.rotation = st.bbox().geom.pose.rotation;
  c.template_name = template_name.empty() ? decl.name : template_name;
  c.source_line = source_line;
  st.cuboids.push_back(std::move(c));
}

template <class S>
void apply_attach(ExecState<S>& st, const Attach<S>& a, ExecDiagnostics& diag) {
  const std::string where = st.path + detail::attach_line(a);
  if (a.c1 == st.bbox().name) throw ExecutionError(Rule::BBoxMoved, where + ": the bbox cannot be moved");
  if (a.c1 == a.c2) throw ExecutionError(Rule::SelfAttach, where + ": cuboid attached to itself");
  CuboidState<S>& c = st.at(a.c1);
  const CuboidState<S>& partner = st.at(a.c2);
  if (!partner.grounded) throw ExecutionError(Rule::Grounding, where + ": partner " + a.c2 + " is not grounded");
  const Vec3<S> target = local_to_world_affine(partner.geom, a.p2);
  if (c.history.empty()) {
    detail::attach_first(c.geom, a.p1, target);
  } else if (c.geom.aligned) {
    detail::attach_aligned(c, target, diag);
  } else if (c.history.size() == 1) {
    detail::attach_second(c, a.p1, target, diag, where);
  } else {
    detail::attach_many(c, a.p1, target, st.tau, diag, where);
  }
  c.history.push_back({a.p1, target, a.c2, a.p2});
  c.grounded = true;
}

namespace detail {

template <class S>
CuboidDecl<S> clone_decl(const ExecState<S>& st, const CuboidState<S>& c, int start) {
  CuboidDecl<S> d = c.decl;
  for (int n = start;; ++n) {
    d.name = "cube" + std::to_string(n);
    if (st.index_of(d.name) < 0) return d;
  }
}

template <class S>
int next_clone_index(const ExecState<S>& st) {
  return static_cast<int>(st.cuboids.size()) - 1;
}

}  // namespace detail

template <class S>
struct MacroExpansion {
  std::vector<CuboidDecl<S>> decls;
  std::vector<Attach<S>> attaches;
};

// Reflection of c across the bbox mid-plane normal to `axis`: one clone plus one
// attach per attachment that moved c, targeting the mirrored world point.
template <class S>
MacroExpansion<S> expand_reflect(const ExecState<S>& st, const Reflect<S>& r) {
  const int ci = st.index_of(r.c);
  if (ci <= 0) throw ExecutionError(Rule::BBoxMoved, "reflect: invalid target '" + r.c + "'");
  const CuboidState<S>& c = st.cuboids[ci];
  if (!c.grounded) throw ExecutionError(Rule::SymmetryGrounded, "reflect: cuboid " + r.c + " is not grounded");
  const CuboidGeom<S>& box = st.bbox().geom;
  const Vec3<S> n = box.pose.rotation.col[axis_index(r.axis)];
  MacroExpansion<S> out;
  out.decls.push_back(detail::clone_decl(st, c, detail::next_clone_index(st)));
  for (const auto& h : c.history) {
    const Vec3<S> w = local_to_world_affine(c.geom, h.own_local);
    const Vec3<S> m = w - n * (S(2.0) * dot(n, w - box.pose.center));
    const auto& partner = st.cuboids[st.index_of(h.partner)];
    out.attaches.push_back({out.decls[0].name, h.partner, h.own_local, world_to_local(partner.geom, m)});
  }
  return out;
}

// Translation group: m clones, clone i offset by i*d/m of the bbox extent
// along `axis`.
template <class S>
MacroExpansion<S> expand_translate(const ExecState<S>& st, const Translate<S>& t) {
  const int ci = st.index_of(t.c);
  if (ci <= 0) throw ExecutionError(Rule::BBoxMoved, "translate: invalid target '" + t.c + "'");
  if (t.m < 1) throw std::invalid_argument("translate: member count must be >= 1");
  const CuboidState<S>& c = st.cuboids[ci];
  if (!c.grounded) throw ExecutionError(Rule::SymmetryGrounded, "translate: cuboid " + t.c + " is not grounded");
  const CuboidGeom<S>& box = st.bbox().geom;
  const int a = axis_index(t.axis);
  const Vec3<S> dir = box.pose.rotation.col[a];
  MacroExpansion<S> out;
  int next = detail::next_clone_index(st);
  for (int i = 1; i <= t.m; ++i) {
    CuboidDecl<S> d = c.decl;
    for (;; ++next) {
      d.name = "cube" + std::to_string(next);
      bool taken = st.index_of(d.name) >= 0;
      for (const auto& prev : out.decls) taken = taken || prev.name == d.name;
      if (!taken) break;
    }
    ++next;
    out.decls.push_back(d);
    const S offset = t.d * S(static_cast<double>(i) / t.m) * box.dims[a];
    for (const auto& h : c.history) {
      const Vec3<S> w = local_to_world_affine(c.geom, h.own_local) + dir * offset;
      const auto& partner = st.cuboids[st.index_of(h.partner)];
      out.attaches.push_back({d.name, h.partner, h.own_local, world_to_local(partner.geom, w)});
    }
  }
  return out;
}

namespace detail {

template <class S>
void record_step(ExecState<S>& st, const std::string& command, std::vector<TraceStep>* trace) {
  if (!trace) return;
  TraceStep step;
  step.step = static_cast<int>(trace->size());
  step.path = st.path;
  step.command = command;
  for (const auto& c : st.cuboids) step.cuboids.push_back({c.name, geom_cast<double>(c.geom)});
  trace->push_back(std::move(step));
}

template <class S>
void log_attach(const ExecState<S>& st, const Attach<S>& a, std::vector<AttachLogEntry>& log) {
  const auto& c = st.cuboids[st.index_of(a.c1)];
  log.push_back({st.path, a.c1, a.c2, primal_vec(local_to_world_affine(c.geom, a.p1)),
                 primal_vec(c.history.back().target_world)});
}

// Runs one program level in its own frame. The expanded program for the level
// is accumulated alongside.
template <class S>
ExecState<S> run_level(const BasicProgram<S>& p, const std::string& path, const ExecOptions& opt,
                       ExecutedShape<S>& out, BasicProgram<S>& expanded) {
  ExecState<S> st;
  st.path = path;
  st.tau = opt.tau_degrees * std::numbers::pi / 180.0;
  CuboidState<S> box;
  box.name = p.bbox.name;
  box.decl = p.bbox;
  box.geom.dims = p.bbox.dims();
  box.geom.aligned = true;
  box.grounded = true;
  box.template_name = box.name;
  box.source_line = 1;
  st.cuboids.push_back(box);

  expanded.owner = p.owner;
  expanded.bbox = p.bbox;
  expanded.cuboids = p.cuboids;
  expanded.children = p.children;

  std::vector<TraceStep>* trace = opt.record_trace ? &out.trace : nullptr;
  int line = 1;
  record_step(st, decl_line(p.bbox), trace);
  for (const auto& d : p.cuboids) {
    instantiate(st, d, ++line, "");
    record_step(st, decl_line(d), trace);
  }
  auto run_attach = [&](const Attach<S>& a) {
    apply_attach(st, a, out.diagnostics);
    log_attach(st, a, out.attachments);
    expanded.attaches.push_back(a);
  };
  for (const auto& cmd : p.attaches) {
    ++line;
    if (const auto* a = std::get_if<0>(&cmd)) {
      run_attach(*a);
    } else {
      const auto [first, second] = expand_squeeze(std::get<1>(cmd));
      run_attach(first);
      run_attach(second);
    }
    record_step(st, command_line(cmd), trace);
  }
  for (const auto& cmd : p.symmetries) {
    ++line;
    const MacroExpansion<S> ex = cmd.index() == 0 ? expand_reflect(st, std::get<0>(cmd))
                                                  : expand_translate(st, std::get<1>(cmd));
    const std::string& target = cmd.index() == 0 ? std::get<0>(cmd).c : std::get<1>(cmd).c;
    const std::string tmpl = st.at(target).template_name;
    for (const auto& d : ex.decls) {
      instantiate(st, d, line, tmpl);
      expanded.cuboids.push_back(d);
      if (const auto* child = p.child_for(tmpl)) {
        BasicProgram<S> copy = *child;
        copy.owner = d.name;
        expanded.children.push_back(std::move(copy));
      }
    }
    for (const auto& a : ex.attaches) run_attach(a);
    if (cmd.index() == 0) {
      const auto& orig = st.at(target).geom;
      const auto& clone = st.at(ex.decls[0].name).geom;
      if (norm(primal_vec(orig.pose.center) - primal_vec(clone.pose.center)) <= 1e-9 * (1.0 + primal_diag(orig))) {
        out.diagnostics.warn("degenerate-reflect", path, "reflected clone of " + target + " coincides with it");
      }
    }
    record_step(st, command_line(cmd), trace);
  }
  for (auto it = st.cuboids.begin() + 1; it != st.cuboids.end();) {
    if (!it->grounded) {
      out.diagnostics.warn("ungrounded-discard", path, "cuboid " + it->name + " was never grounded and is discarded");
      it = st.cuboids.erase(it);
    } else {
      ++it;
    }
  }
  // Containment within the bounding volume (10% slack), reported only.
  const Cuboid bb = geom_cast<double>(st.bbox().geom);
  for (std::size_t i = 1; i < st.cuboids.size(); ++i) {
    for (const auto& corner : corners(geom_cast<double>(st.cuboids[i].geom))) {
      if (!point_in_cuboid(corner, bb, kContainmentSlack)) {
        out.diagnostics.warn("containment", path, "cuboid " + st.cuboids[i].name + " extends beyond the bounding volume");
        break;
      }
    }
  }
  return st;
}

// Maps a leaf from a child frame (child bbox at the origin) into the parent
// cuboid, scaling per axis by parent.dims / child_bbox_dims. Rotated leaves
// are re-orthonormalised after the non-uniform scale.
template <class S>
CuboidGeom<S> map_into(const CuboidGeom<S>& parent, const Vec3<S>& child_box_dims, const CuboidGeom<S>& leaf) {
  CuboidGeom<S> box;
  box.dims = child_box_dims;
  const Vec3<S> u = world_to_local(box, leaf.pose.center);
  CuboidGeom<S> out;
  out.aligned = leaf.aligned;
  out.pose.center = local_to_world_affine(parent, u);
  Vec3<S> sc{parent.dims.x / child_box_dims.x, parent.dims.y / child_box_dims.y, parent.dims.z / child_box_dims.z};
  std::array<Vec3<S>, 3> cols;
  for (int j = 0; j < 3; ++j) {
    const Vec3<S> col = parent.pose.rotation * hadamard(sc, leaf.pose.rotation.col[j]);
    const S len = norm(col);
    out.dims[j] = leaf.dims[j] * len;
    cols[j] = col / len;
  }
  const Vec3<S> e0 = cols[0];
  const Vec3<S> e1 = normalized(cols[1] - e0 * dot(e0, cols[1]));
  const Vec3<S> e2 = cross(e0, e1);
  out.pose.rotation = Mat3<S>::from_columns(e0, e1, e2);
  return out;
}

template <class S>
void execute_into(const BasicProgram<S>& p, const std::string& path, const ExecOptions& opt, ExecutedShape<S>& out,
                  BasicProgram<S>& expanded, std::vector<Leaf<S>>& leaves, std::vector<Leaf<S>>& internal) {
  ExecState<S> st = run_level(p, path, opt, out, expanded);
  for (std::size_t i = 1; i < st.cuboids.size(); ++i) {
    const auto& c = st.cuboids[i];
    const BasicProgram<S>* child = p.child_for(c.template_name);
    if (opt.mode == ExecMode::Hierarchical && child) {
      BasicProgram<S> child_expanded;
      std::vector<Leaf<S>> sub, sub_internal;
      ExecOptions inner = opt;
      inner.build_expanded = false;
      execute_into(*child, path + c.name + "/", inner, out, child_expanded, sub, sub_internal);
      internal.push_back({c.geom, path + c.name, c.source_line});
      for (auto& leaf : sub) {
        leaf.geom = map_into(c.geom, child->bbox.dims(), leaf.geom);
        leaves.push_back(std::move(leaf));
      }
      for (auto& node : sub_internal) {
        node.geom = map_into(c.geom, child->bbox.dims(), node.geom);
        internal.push_back(std::move(node));
      }
    } else {
      leaves.push_back({c.geom, path + c.name, c.source_line});
    }
  }
  // Children of the expanded program are expanded recursively as well.
  if (!opt.build_expanded) return;
  for (auto& child : expanded.children) {
    ExecutedShape<S> scratch;
    BasicProgram<S> ex;
    std::vector<Leaf<S>> ignore, ignore_internal;
    ExecOptions flat = opt;
    flat.record_trace = false;
    flat.mode = ExecMode::Flat;
    execute_into(child, path + child.owner + "/", flat, scratch, ex, ignore, ignore_internal);
    ex.owner = child.owner;
    child = std::move(ex);
  }
}

}  // namespace detail

// Executes a parsed program. Repairable range violations are clamped with
// warnings; structural violations raise ExecutionError naming the rule.
template <class S>
ExecutedShape<S> execute(const BasicProgram<S>& program, const ExecOptions& opt = {}) {
  ExecutedShape<S> out;
  const std::vector<Violation> found = static_check(program);
  for (const auto& v : found) {
    if (v.severity == Severity::Error) throw ExecutionError(v.rule, (v.path.empty() ? "" : v.path + ": ") + v.message);
  }
  BasicProgram<S> p = program;
  for (const auto& v : found) {
    if (v.severity == Severity::Repairable) out.diagnostics.warn(std::string(rule_name(v.rule)), v.path, v.message + " (clamped)");
    if (v.severity == Severity::Warning) out.diagnostics.warn(std::string(rule_name(v.rule)), v.path, v.message);
  }
  repair_ranges(p);
  out.bbox.dims = p.bbox.dims();
  out.bbox.aligned = true;
  detail::execute_into(p, "", opt, out, out.expanded, out.leaves, out.internal);
  return out;
}

// Macro-free program equivalent to `p` (squeeze/reflect/translate replaced by
// the Cuboid and attach commands they expand to).
inline Program expand_program(const Program& p) {
  ExecOptions opt;
  opt.mode = ExecMode::Hierarchical;
  return execute(p, opt).expanded;
}

// Full semantic check: static rules plus post-execution containment.
inline std::vector<Violation> check_semantics(const Program& p) {
  std::vector<Violation> out = static_check(p);
  if (has_errors(out)) return out;
  try {
    ExecOptions opt;
    const auto shape = execute(p, opt);
    for (const auto& w : shape.diagnostics.warnings) {
      if (w.code == rule_name(Rule::Containment)) {
        out.push_back({Rule::Containment, Severity::Error, w.path, w.message});
      }
    }
  } catch (const ExecutionError& e) {
    out.push_back({e.rule(), Severity::Error, "", e.what()});
  }
  return out;
}

}  // namespace shapeasm
