#pragma once

// Static semantic-validity rules. Range violations are repairable by clamping;
// the others are structural and make a program unexecutable.

#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "shapeasm/program.hpp"

namespace shapeasm {

enum class Rule {
  CoordRange,        // attach/squeeze/translate operands outside [0, 1]
  DimRange,          // cuboid dims outside [0.01, bbox dim]
  BBoxAttachFace,    // attach to bbox away from its top/bottom faces
  BBoxSubprogram,    // the bbox owns a sub-program
  SingleAttach,      // a cuboid pair attached more than once
  BBoxMoved,         // bbox used as the moving cuboid
  Grounding,         // attach onto a partner that is not grounded yet
  SymmetryGrounded,  // reflect/translate of an ungrounded cuboid
  BlockOrder,        // lines out of grammar order
  Containment,       // executed geometry leaves the bounding volume (10% slack)
  SelfAttach,        // attach(c, c, ...)
  ChildLimit,        // more than 10 cuboids in one program
};

enum class Severity { Repairable, Error, Warning };

inline std::string_view rule_name(Rule r) {
  switch (r) {
    case Rule::CoordRange: return "coord-range";
    case Rule::DimRange: return "dim-range";
    case Rule::BBoxAttachFace: return "bbox-attach-face";
    case Rule::BBoxSubprogram: return "bbox-subprogram";
    case Rule::SingleAttach: return "single-attach";
    case Rule::BBoxMoved: return "bbox-moved";
    case Rule::Grounding: return "grounding";
    case Rule::SymmetryGrounded: return "symmetry-grounded";
    case Rule::BlockOrder: return "block-order";
    case Rule::Containment: return "containment";
    case Rule::SelfAttach: return "self-attach";
    case Rule::ChildLimit: return "child-limit";
  }
  return "?";
}

inline std::string_view severity_name(Severity s) {
  switch (s) {
    case Severity::Repairable: return "repairable";
    case Severity::Error: return "error";
    case Severity::Warning: return "warning";
  }
  return "?";
}

struct Violation {
  Rule rule;
  Severity severity;
  std::string path;  // sub-program owner chain, "" at the root
  std::string message;
};

inline constexpr double kMinDim = 0.01;
inline constexpr double kBBoxFaceTol = 0.05;
inline constexpr double kContainmentSlack = 0.10;
inline constexpr int kMaxChildren = 10;

// Expands a squeeze into its two attaches (centre of f and of opposite(f) on
// c1, onto (u, v) of opposite(f) on c2 and of f on c3).
template <class S>
std::pair<Attach<S>, Attach<S>> expand_squeeze(const Squeeze<S>& sq) {
  const Face f = sq.face;
  const Face g = opposite(f);
  Attach<S> a{sq.c1, sq.c2, face_point(f, S(0.5), S(0.5)), face_point(g, sq.u, sq.v)};
  Attach<S> b{sq.c1, sq.c3, face_point(g, S(0.5), S(0.5)), face_point(f, sq.u, sq.v)};
  return {a, b};
}

template <class S>
std::vector<Attach<S>> expanded_attaches(const BasicProgram<S>& p) {
  std::vector<Attach<S>> out;
  for (const auto& cmd : p.attaches) {
    if (const auto* a = std::get_if<0>(&cmd)) {
      out.push_back(*a);
    } else {
      auto [x, y] = expand_squeeze(std::get<1>(cmd));
      out.push_back(x);
      out.push_back(y);
    }
  }
  return out;
}

namespace detail {

template <class S>
bool out_of_unit(const S& x) {
  const double v = static_cast<double>(primal(x));
  return !(v >= 0.0 && v <= 1.0);
}

template <class S>
void range_findings(const BasicProgram<S>& p, const std::string& path, std::vector<Violation>& out) {
  auto dims = [&](const CuboidDecl<S>& d, bool is_bbox) {
    for (int i = 0; i < 3; ++i) {
      const double v = static_cast<double>(primal(d.dim(i)));
      const double hi = is_bbox ? 1e300 : static_cast<double>(primal(p.bbox.dim(i)));
      if (!(v >= kMinDim && v <= hi)) {
        out.push_back({Rule::DimRange, Severity::Repairable, path,
                       d.name + " dimension " + std::to_string(v) + " outside [0.01, bbox dim]"});
        return;
      }
    }
  };
  dims(p.bbox, true);
  for (const auto& c : p.cuboids) dims(c, false);
  int line = 0;
  for (const auto& cmd : p.attaches) {
    ++line;
    bool bad = false;
    if (const auto* a = std::get_if<0>(&cmd)) {
      for (int i = 0; i < 3; ++i) bad = bad || out_of_unit(a->p1[i]) || out_of_unit(a->p2[i]);
    } else {
      const auto& s = std::get<1>(cmd);
      bad = out_of_unit(s.u) || out_of_unit(s.v);
    }
    if (bad) {
      out.push_back({Rule::CoordRange, Severity::Repairable, path,
                     "attach line " + std::to_string(line) + ": coordinate outside [0, 1]"});
    }
  }
  for (const auto& cmd : p.symmetries) {
    if (const auto* t = std::get_if<1>(&cmd); t && out_of_unit(t->d)) {
      out.push_back({Rule::CoordRange, Severity::Repairable, path, "translate distance outside [0, 1]"});
    }
  }
  for (const auto& child : p.children) range_findings(child, path + child.owner + "/", out);
}

inline bool bbox_face_ok(double y) { return y <= kBBoxFaceTol || y >= 1.0 - kBBoxFaceTol; }

template <class S>
void structural_findings(const BasicProgram<S>& p, const std::string& path, std::vector<Violation>& out) {
  const std::string& bbox = p.bbox.name;
  if (static_cast<int>(p.cuboids.size()) > kMaxChildren) {
    out.push_back({Rule::ChildLimit, Severity::Warning, path,
                   std::to_string(p.cuboids.size()) + " cuboids exceed the limit of 10 per program"});
  }
  for (const auto& child : p.children) {
    if (child.owner == bbox) {
      out.push_back({Rule::BBoxSubprogram, Severity::Error, path, "bbox cannot own a sub-program"});
    }
  }
  std::set<std::string> grounded{bbox};
  // Unordered pair -> (count, bbox faces used).
  std::set<std::pair<std::string, std::string>> pairs;
  std::set<std::pair<std::string, int>> bbox_faces;
  for (const Attach<S>& a : expanded_attaches(p)) {
    const std::string text = "attach(" + a.c1 + ", " + a.c2 + ", ...)";
    if (a.c1 == bbox) {
      out.push_back({Rule::BBoxMoved, Severity::Error, path, text + ": the bbox cannot be moved"});
      continue;
    }
    if (a.c1 == a.c2) {
      out.push_back({Rule::SelfAttach, Severity::Error, path, text + ": cuboid attached to itself"});
      continue;
    }
    if (a.c2 == bbox) {
      const double y = static_cast<double>(primal(a.p2.y));
      if (!bbox_face_ok(y)) {
        out.push_back({Rule::BBoxAttachFace, Severity::Error, path,
                       text + ": attachments to the bbox must be on its top or bottom face within 0.05"});
      }
    }
    const auto key = std::minmax(a.c1, a.c2);
    if (!pairs.insert(key).second) {
      bool exempt = false;
      if (a.c2 == bbox) {
        const int face = static_cast<double>(primal(a.p2.y)) >= 0.5 ? 1 : 0;
        exempt = bbox_faces.count({a.c1, face}) == 0 && bbox_faces.count({a.c1, 1 - face}) == 1;
      }
      if (!exempt) {
        out.push_back({Rule::SingleAttach, Severity::Error, path, text + ": pair already attached"});
      }
    }
    if (a.c2 == bbox) bbox_faces.insert({a.c1, static_cast<double>(primal(a.p2.y)) >= 0.5 ? 1 : 0});
    if (!grounded.count(a.c2)) {
      out.push_back({Rule::Grounding, Severity::Error, path, text + ": partner " + a.c2 + " is not grounded"});
      continue;
    }
    grounded.insert(a.c1);
  }
  for (const auto& cmd : p.symmetries) {
    const std::string& c = cmd.index() == 0 ? std::get<0>(cmd).c : std::get<1>(cmd).c;
    if (c == bbox) {
      out.push_back({Rule::BBoxMoved, Severity::Error, path, "symmetry cannot target the bbox"});
    } else if (!grounded.count(c)) {
      out.push_back({Rule::SymmetryGrounded, Severity::Error, path, "symmetry on ungrounded cuboid " + c});
    }
  }
  for (const auto& child : p.children) structural_findings(child, path + child.owner + "/", out);
}

}  // namespace detail

// Clamps every repairable operand in place. Dims are clamped to
// [0.01, bbox dim] per axis; coordinates and translate distances to [0, 1].
template <class S>
void repair_ranges(BasicProgram<S>& p) {
  for (int i = 0; i < 3; ++i) p.bbox.dim(i) = smax(p.bbox.dim(i), S(kMinDim));
  for (auto& c : p.cuboids)
    for (int i = 0; i < 3; ++i) c.dim(i) = sclamp(c.dim(i), S(kMinDim), p.bbox.dim(i));
  const S zero(0.0), one(1.0);
  for (auto& cmd : p.attaches) {
    if (auto* a = std::get_if<0>(&cmd)) {
      for (int i = 0; i < 3; ++i) {
        a->p1[i] = sclamp(a->p1[i], zero, one);
        a->p2[i] = sclamp(a->p2[i], zero, one);
      }
    } else {
      auto& s = std::get<1>(cmd);
      s.u = sclamp(s.u, zero, one);
      s.v = sclamp(s.v, zero, one);
    }
  }
  for (auto& cmd : p.symmetries)
    if (auto* t = std::get_if<1>(&cmd)) t->d = sclamp(t->d, zero, one);
  for (auto& child : p.children) repair_ranges(child);
}

// All findings that do not require execution. Structural rules are judged on
// the range-repaired program.
template <class S>
std::vector<Violation> static_check(const BasicProgram<S>& p) {
  std::vector<Violation> out;
  detail::range_findings(p, "", out);
  BasicProgram<S> fixed = p;
  repair_ranges(fixed);
  detail::structural_findings(fixed, "", out);
  return out;
}

inline bool has_errors(const std::vector<Violation>& vs) {
  for (const auto& v : vs)
    if (v.severity == Severity::Error) return true;
  return false;
}

}  // namespace shapeasm
