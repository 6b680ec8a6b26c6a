#pragma once

// Shared test helpers: fixture loading, random program generation and
// synthetic part graphs.

#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "shapeasm/shapeasm.hpp"

namespace testsupport {

using namespace shapeasm;

inline std::string data_dir() {
  if (const char* env = std::getenv("SHAPEASM_DATA_DIR")) return env;
  return SHAPEASM_DATA_DIR;
}

inline std::string fixture_dir() { return SHAPEASM_FIXTURE_DIR; }

inline std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("missing test input " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline Program load_program(const std::string& path) { return parse_program(slurp(path)); }

inline const std::vector<std::string>& sample_program_names() {
  static const std::vector<std::string> names{"bench", "chair", "lounge", "shelf", "stool", "table"};
  return names;
}

inline Program sample_program(const std::string& name) {
  return load_program(data_dir() + "/programs/" + name + ".sa");
}

inline std::vector<Cuboid> leaves_of(const Program& p, ExecMode mode = ExecMode::Hierarchical) {
  ExecOptions opt;
  opt.mode = mode;
  std::vector<Cuboid> out;
  for (const auto& l : execute(p, opt).leaves) out.push_back(l.geom);
  return out;
}

// Values with three decimals survive print/parse exactly.
inline double q3(double x) { return std::round(x * 1000.0) / 1000.0; }

struct RandomProgramOptions {
  int max_cuboids = 5;
  int max_depth = 1;
  bool macros = true;
  bool squeezes = true;
  double hierarchy_prob = 0.3;
  double aligned_prob = 0.5;
};

namespace detail {

inline double uni(std::mt19937_64& rng, double a, double b) { return a + (b - a) * unit_uniform(rng); }

inline Vec3d random_face_point(std::mt19937_64& rng) {
  const Face f = static_cast<Face>(rng() % 6);
  return face_point(f, q3(uni(rng, 0.0, 1.0)), q3(uni(rng, 0.0, 1.0)));
}

inline Program random_level(std::mt19937_64& rng, const RandomProgramOptions& opt, int depth, const Vec3d& box) {
  Program p;
  p.bbox = {kBBox, box.x, box.z, box.y, true};
  const int n = 1 + static_cast<int>(rng() % static_cast<unsigned>(opt.max_cuboids));
  for (int i = 0; i < n; ++i) {
    CuboidDecl<double> d;
    d.name = "cube" + std::to_string(i);
    d.l = std::max(0.01, q3(uni(rng, 0.1, 0.6) * box.x));
    d.h = std::max(0.01, q3(uni(rng, 0.1, 0.6) * box.y));
    d.w = std::max(0.01, q3(uni(rng, 0.1, 0.6) * box.z));
    d.aligned = unit_uniform(rng) < opt.aligned_prob;
    p.cuboids.push_back(d);
  }
  std::vector<std::string> grounded;  // non-bbox grounded cuboids
  std::set<std::pair<std::string, std::string>> pairs;
  auto pair_key = [](const std::string& a, const std::string& b) { return std::minmax(a, b); };
  for (int i = 0; i < n; ++i) {
    const std::string c = p.cuboids[i].name;
    const double r = unit_uniform(rng);
    if (opt.squeezes && r < 0.25) {
      Squeeze<double> s;
      s.c1 = c;
      if (grounded.size() >= 2 && unit_uniform(rng) < 0.5) {
        const std::size_t a = rng() % grounded.size();
        std::size_t b = rng() % (grounded.size() - 1);
        if (b >= a) ++b;
        s.c2 = grounded[a];
        s.c3 = grounded[b];
        s.face = static_cast<Face>(rng() % 6);
      } else {
        s.c2 = s.c3 = kBBox;
        s.face = unit_uniform(rng) < 0.5 ? Face::Top : Face::Bot;
      }
      s.u = q3(uni(rng, 0.1, 0.9));
      s.v = q3(uni(rng, 0.1, 0.9));
      p.attaches.push_back(s);
      pairs.insert(pair_key(c, s.c2));
      pairs.insert(pair_key(c, s.c3));
    } else if (grounded.empty() || r < 0.55) {
      const bool top = unit_uniform(rng) < 0.3;
      Attach<double> a;
      a.c1 = c;
      a.c2 = kBBox;
      a.p1 = {q3(uni(rng, 0.0, 1.0)), top ? 1.0 : 0.0, q3(uni(rng, 0.0, 1.0))};
      a.p2 = {q3(uni(rng, 0.1, 0.9)), top ? 1.0 : 0.0, q3(uni(rng, 0.1, 0.9))};
      p.attaches.push_back(a);
      pairs.insert(pair_key(c, kBBox));
    } else {
      Attach<double> a;
      a.c1 = c;
      a.c2 = grounded[rng() % grounded.size()];
      a.p1 = random_face_point(rng);
      a.p2 = random_face_point(rng);
      p.attaches.push_back(a);
      pairs.insert(pair_key(c, a.c2));
    }
    // Optional extra attach onto another grounded cuboid.
    if (!grounded.empty() && unit_uniform(rng) < 0.35) {
      const std::string other = grounded[rng() % grounded.size()];
      if (!pairs.count(pair_key(c, other))) {
        Attach<double> a;
        a.c1 = c;
        a.c2 = other;
        a.p1 = random_face_point(rng);
        a.p2 = random_face_point(rng);
        p.attaches.push_back(a);
        pairs.insert(pair_key(c, other));
      }
    }
    grounded.push_back(c);
  }
  if (opt.macros) {
    for (const auto& c : p.cuboids) {
      const double r = unit_uniform(rng);
      const Axis axis = static_cast<Axis>(rng() % 3);
      if (r < 0.2) {
        p.symmetries.push_back(Reflect<double>{c.name, axis});
      } else if (r < 0.35) {
        p.symmetries.push_back(
            Translate<double>{c.name, axis, 1 + static_cast<int>(rng() % 3), q3(uni(rng, 0.2, 0.8))});
      }
    }
  }
  if (depth < opt.max_depth) {
    for (const auto& c : p.cuboids) {
      if (unit_uniform(rng) < opt.hierarchy_prob) {
        Program child = random_level(rng, opt, depth + 1, c.dims());
        child.owner = c.name;
        p.children.push_back(std::move(child));
      }
    }
  }
  return p;
}

}  // namespace detail

// A random program that passes the static checks (grounded order, bbox
// contacts on its top/bottom faces, one attach per pair).
inline Program random_program(std::mt19937_64& rng, const RandomProgramOptions& opt = {}) {
  for (;;) {
    const Vec3d box{q3(detail::uni(rng, 0.5, 2.0)), q3(detail::uni(rng, 0.5, 2.0)), q3(detail::uni(rng, 0.5, 2.0))};
    Program p = detail::random_level(rng, opt, 0, box);
    if (has_errors(static_check(p))) continue;
    // Macro clones can land off the bbox faces or outside [0, 1]; keep
    // programs whose expansion needs no repair.
    bool clean = true;
    try {
      for (const auto& v : static_check(expand_program(p)))
        if (v.severity != Severity::Warning) clean = false;
    } catch (const std::exception&) {
      clean = false;
    }
    if (clean) return p;
  }
}

inline bool in_unit_range(const Program& p) {
  bool ok = true;
  for_each_param(const_cast<Program&>(p), [&](double& v, const ParamInfo& info) {
    if (info.kind == ParamKind::AttachCoord || info.kind == ParamKind::SqueezeCoord ||
        info.kind == ParamKind::TranslateDist) {
      ok = ok && v >= 0.0 && v <= 1.0;
    }
  });
  return ok;
}

// Perturbs every cuboid dimension by a factor in [1 - frac, 1 + frac].
inline Program perturb_dims(const Program& p, std::mt19937_64& rng, double frac) {
  Program q = p;
  for_each_param(q, [&](double& v, const ParamInfo& info) {
    if (info.kind == ParamKind::Dim) v *= 1.0 + frac * (2.0 * unit_uniform(rng) - 1.0);
  });
  return q;
}

inline PartNode leaf_node(const std::string& id, const std::string& label, const Cuboid& box) {
  PartNode n;
  n.id = id;
  n.label = label;
  n.box = box;
  return n;
}

// Root node whose box tightly bounds the given axis-aligned leaves.
inline PartNode flat_graph(const std::vector<Cuboid>& leaves, const std::string& label = "part") {
  Vec3d lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
  for (const auto& c : leaves)
    for (const auto& p : corners(c))
      for (int i = 0; i < 3; ++i) {
        lo[i] = std::min(lo[i], p[i]);
        hi[i] = std::max(hi[i], p[i]);
      }
  PartNode root;
  root.id = "root";
  root.label = "root";
  root.box = make_cuboid(hi - lo, (hi + lo) * 0.5);
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    root.children.push_back(leaf_node("p" + std::to_string(i), label, leaves[i]));
  }
  return root;
}

// F-score between two leaf sets on a dense surface lattice, threshold 2% of
// the reference diagonal.
inline double lattice_fscore(const std::vector<Cuboid>& a, const std::vector<Cuboid>& ref) {
  const double thr = 0.02 * shape_diagonal(ref);
  const PointCloud pa = sample_surface_lattice(a, thr / 4), pr = sample_surface_lattice(ref, thr / 4);
  return f_score(pa, pr, thr);
}

}  // namespace testsupport
