#pragma once

// Program AST. Every continuous operand is stored as the scalar type S so a
// program can be lifted onto an autodiff tape and executed differentiably.

#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "shapeasm/geometry.hpp"

namespace shapeasm {

inline const std::string kBBox = "bbox";

template <class S>
struct CuboidDecl {
  std::string name;
  S l{}, w{}, h{};
  bool aligned = true;

  // Text order is (l, w, h); geometry order is (x, y, z) = (l, h, w).
  Vec3<S> dims() const { return {l, h, w}; }
  S& dim(int axis) { return axis == 0 ? l : (axis == 1 ? h : w); }
  const S& dim(int axis) const { return axis == 0 ? l : (axis == 1 ? h : w); }
};

template <class S>
struct Attach {
  std::string c1, c2;
  Vec3<S> p1, p2;
};

template <class S>
struct Squeeze {
  std::string c1, c2, c3;
  Face face = Face::Left;
  S u{}, v{};
};

template <class S>
struct Reflect {
  std::string c;
  Axis axis = Axis::X;
};

template <class S>
struct Translate {
  std::string c;
  Axis axis = Axis::X;
  int m = 1;
  S d{};
};

template <class S>
using AttachCmd = std::variant<Attach<S>, Squeeze<S>>;
template <class S>
using SymmetryCmd = std::variant<Reflect<S>, Translate<S>>;

template <class S>
struct BasicProgram {
  std::string owner;  // parent cuboid this program expands; empty at the root
  CuboidDecl<S> bbox;
  std::vector<CuboidDecl<S>> cuboids;
  std::vector<AttachCmd<S>> attaches;
  std::vector<SymmetryCmd<S>> symmetries;
  std::vector<BasicProgram> children;

  const CuboidDecl<S>* find_decl(const std::string& name) const {
    if (name == bbox.name) return &bbox;
    for (const auto& c : cuboids)
      if (c.name == name) return &c;
    return nullptr;
  }
  const BasicProgram* child_for(const std::string& name) const {
    for (const auto& c : children)
      if (c.owner == name) return &c;
    return nullptr;
  }
  int line_count() const {
    return 1 + static_cast<int>(cuboids.size() + attaches.size() + symmetries.size());
  }
};

using Program = BasicProgram<double>;

// First `cubeN` name not already used in `p`.
template <class S>
std::string fresh_cuboid_name(const BasicProgram<S>& p, int start = 0) {
  for (int n = start;; ++n) {
    std::string name = "cube" + std::to_string(n);
    if (!p.find_decl(name)) return name;
  }
}

enum class ParamKind { BBoxDim, Dim, AttachCoord, SqueezeCoord, TranslateDist };

struct ParamInfo {
  ParamKind kind;
  std::string path;  // owner chain, e.g. "cube2/" for a child program
  std::string text;  // human-readable locator
};

// Visits every continuous operand in a fixed depth-first order: bbox dims,
// cuboid dims, attach/squeeze coordinates, translate distances, children.
template <class P, class Fn>
void for_each_param(P& p, Fn&& fn, const std::string& path = "") {
  auto decl = [&](auto& d, ParamKind kind) {
    fn(d.l, ParamInfo{kind, path, d.name + ".l"});
    fn(d.w, ParamInfo{kind, path, d.name + ".w"});
    fn(d.h, ParamInfo{kind, path, d.name + ".h"});
  };
  decl(p.bbox, ParamKind::BBoxDim);
  for (auto& c : p.cuboids) decl(c, ParamKind::Dim);
  int line = 0;
  for (auto& cmd : p.attaches) {
    const std::string tag = "attach#" + std::to_string(line++);
    std::visit(
        [&](auto& a) {
          if constexpr (requires { a.p1; }) {
            for (int i = 0; i < 3; ++i) fn(a.p1[i], ParamInfo{ParamKind::AttachCoord, path, tag + ".p1"});
            for (int i = 0; i < 3; ++i) fn(a.p2[i], ParamInfo{ParamKind::AttachCoord, path, tag + ".p2"});
          } else {
            fn(a.u, ParamInfo{ParamKind::SqueezeCoord, path, tag + ".u"});
            fn(a.v, ParamInfo{ParamKind::SqueezeCoord, path, tag + ".v"});
          }
        },
        cmd);
  }
  line = 0;
  for (auto& cmd : p.symmetries) {
    const std::string tag = "sym#" + std::to_string(line++);
    if (auto* t = std::get_if<1>(&cmd)) fn(t->d, ParamInfo{ParamKind::TranslateDist, path, tag + ".d"});
  }
  for (auto& child : p.children) for_each_param(child, fn, path + child.owner + "/");
}

template <class T, class S>
CuboidDecl<T> decl_cast(const CuboidDecl<S>& d) {
  return {d.name, scalar_cast<T>(d.l), scalar_cast<T>(d.w), scalar_cast<T>(d.h), d.aligned};
}

template <class T, class S>
BasicProgram<T> program_cast(const BasicProgram<S>& p) {
  BasicProgram<T> out;
  out.owner = p.owner;
  out.bbox = decl_cast<T>(p.bbox);
  for (const auto& c : p.cuboids) out.cuboids.push_back(decl_cast<T>(c));
  for (const auto& cmd : p.attaches) {
    if (const auto* a = std::get_if<0>(&cmd)) {
      out.attaches.push_back(Attach<T>{a->c1, a->c2, vec_cast<T>(a->p1), vec_cast<T>(a->p2)});
    } else {
      const auto& s = std::get<1>(cmd);
      out.attaches.push_back(Squeeze<T>{s.c1, s.c2, s.c3, s.face, scalar_cast<T>(s.u), scalar_cast<T>(s.v)});
    }
  }
  for (const auto& cmd : p.symmetries) {
    if (const auto* r = std::get_if<0>(&cmd)) {
      out.symmetries.push_back(Reflect<T>{r->c, r->axis});
    } else {
      const auto& t = std::get<1>(cmd);
      out.symmetries.push_back(Translate<T>{t.c, t.axis, t.m, scalar_cast<T>(t.d)});
    }
  }
  for (const auto& c : p.children) out.children.push_back(program_cast<T>(c));
  return out;
}

inline std::vector<double> get_params(const Program& p) {
  std::vector<double> out;
  for_each_param(const_cast<Program&>(p), [&](double& v, const ParamInfo&) { out.push_back(v); });
  return out;
}

inline std::vector<ParamInfo> param_infos(const Program& p) {
  std::vector<ParamInfo> out;
  for_each_param(const_cast<Program&>(p), [&](double&, const ParamInfo& info) { out.push_back(info); });
  return out;
}

template <class S>
void set_params(BasicProgram<S>& p, const std::vector<S>& values) {
  std::size_t i = 0;
  for_each_param(p, [&](S& v, const ParamInfo&) {
    if (i >= values.size()) throw std::invalid_argument("set_params: too few values");
    v = values[i++];
  });
  if (i != values.size()) throw std::invalid_argument("set_params: too many values");
}

// Program on `tape` whose continuous operands are fresh differentiation roots,
// returned in for_each_param order.
inline BasicProgram<ad::Var> lift_program(const Program& p, ad::Tape& tape, std::vector<ad::Var>* roots) {
  BasicProgram<ad::Var> out = program_cast<ad::Var>(p);
  const std::vector<ad::Var> lifted = ad::lift(get_params(p), tape);
  set_params(out, lifted);
  if (roots) *roots = lifted;
  return out;
}

}  // namespace shapeasm
