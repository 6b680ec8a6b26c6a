#pragma once

// Central finite-difference verification of reverse-mode gradients.
//
// Numeric derivatives are taken in long double so that eps = 1e-5 is not
// swamped by roundoff. A parameter whose perturbation changes a discrete
// choice (branch, clamp, leaf set) sits at a kink and is excluded.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shapeasm/autodiff.hpp"
#include "shapeasm/interpreter.hpp"
#include "shapeasm/point_cloud.hpp"
#include "shapeasm/program.hpp"

namespace shapeasm {

inline double relative_error(double analytic, double numeric) {
  const double den = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / den;
}

struct GradCheckResult {
  double max_rel_error = 0;
  int worst_param = -1;
  int worst_output = -1;
  int outputs = 0;
  std::vector<bool> excluded;  // per parameter: nondifferentiable point
  // Jacobians, row-major [output][param].
  std::vector<std::vector<double>> analytic;
  std::vector<std::vector<double>> numeric;

  int excluded_count() const {
    int n = 0;
    for (bool b : excluded) n += b;
    return n;
  }
};

// Describes the discrete state of a function at a parameter vector; equal
// strings on both sides of a central difference mean no kink was crossed.
using KinkSignature = std::function<std::string(const std::vector<double>&)>;

// `f` maps a parameter vector to a vector of outputs and must accept both
// std::vector<ad::Var> and std::vector<long double>.
template <class F>
GradCheckResult jacobian_check(F&& f, const std::vector<double>& params, double eps, const KinkSignature& kink = {}) {
  if (!(eps > 0)) throw std::invalid_argument("finite_diff_check: eps must be positive");
  GradCheckResult r;
  const std::size_t n = params.size();
  r.excluded.assign(n, false);

  ad::Tape tape;
  const std::vector<ad::Var> roots = ad::lift(params, tape);
  const std::vector<ad::Var> out = f(roots);
  r.outputs = static_cast<int>(out.size());
  for (const ad::Var& y : out) {
    if (!std::isfinite(y.value())) throw std::domain_error("finite_diff_check: non-finite function value");
    r.analytic.push_back(y.is_constant() ? std::vector<double>(n, 0.0) : ad::gradient(y, roots));
  }
  r.numeric.assign(out.size(), std::vector<double>(n, 0.0));

  const std::string base = kink ? kink(params) : std::string();
  std::vector<long double> x(params.begin(), params.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (kink) {
      std::vector<double> lo = params, hi = params;
      lo[i] -= eps;
      hi[i] += eps;
      if (kink(lo) != base || kink(hi) != base) {
        r.excluded[i] = true;
        continue;
      }
    }
    const long double xi = x[i];
    x[i] = xi + static_cast<long double>(eps);
    const std::vector<long double> fp = f(x);
    x[i] = xi - static_cast<long double>(eps);
    const std::vector<long double> fm = f(x);
    x[i] = xi;
    if (fp.size() != out.size() || fm.size() != out.size()) {
      r.excluded[i] = true;
      continue;
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
      if (!std::isfinite(static_cast<double>(fp[k])) || !std::isfinite(static_cast<double>(fm[k]))) {
        throw std::domain_error("finite_diff_check: non-finite function value");
      }
      const double num = static_cast<double>((fp[k] - fm[k]) / (2.0L * static_cast<long double>(eps)));
      r.numeric[k][i] = num;
      const double e = relative_error(r.analytic[k][i], num);
      if (e > r.max_rel_error) {
        r.max_rel_error = e;
        r.worst_param = static_cast<int>(i);
        r.worst_output = static_cast<int>(k);
      }
    }
  }
  return r;
}

// Scalar form: `f` returns a single value of the argument's scalar type.
template <class F>
GradCheckResult finite_diff_check(F&& f, const std::vector<double>& params, double eps, const KinkSignature& kink = {}) {
  auto wrapped = [&f](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::value_type;
    return std::vector<S>{f(x)};
  };
  return jacobian_check(wrapped, params, eps, kink);
}

// Discrete state of a program execution: clamp state of every operand, every
// branch taken by the interpreter, and the set of leaves produced.
inline std::string program_kink_signature(const Program& p, const std::vector<double>& params) {
  Program q = p;
  set_params(q, params);
  Program fixed = q;
  repair_ranges(fixed);
  const std::vector<double> raw = get_params(q), clamped = get_params(fixed);
  std::string sig;
  for (std::size_t i = 0; i < raw.size(); ++i) sig += raw[i] == clamped[i] ? '.' : 'c';
  sig += '|';
  try {
    ExecOptions opt;
    opt.build_expanded = false;
    const auto shape = execute(q, opt);
    for (const auto& d : shape.diagnostics.decisions) sig += d.site + ":" + std::to_string(d.choice) + ";";
    sig += '|';
    for (const auto& l : shape.leaves) sig += l.path + ",";
  } catch (const std::exception& e) {
    sig += std::string("error:") + e.what();
  }
  return sig;
}

namespace detail {

template <class S>
std::vector<S> leaf_vertex_coords(const ExecutedShape<S>& shape) {
  std::vector<S> out;
  for (const auto& leaf : shape.leaves) {
    for (int k = 0; k < 8; ++k) {
      const Vec3<S> local{S((k & 1) ? 1.0 : 0.0), S((k & 2) ? 1.0 : 0.0), S((k & 4) ? 1.0 : 0.0)};
      const Vec3<S> w = local_to_world_affine(leaf.geom, local);
      out.push_back(w.x);
      out.push_back(w.y);
      out.push_back(w.z);
    }
  }
  return out;
}

template <class S>
ExecutedShape<S> execute_with(const Program& p, const std::vector<S>& params) {
  BasicProgram<S> q = program_cast<S>(p);
  set_params(q, params);
  ExecOptions opt;
  opt.build_expanded = false;
  return execute(q, opt);
}

}  // namespace detail

struct ProgramGradCheck {
  GradCheckResult vertices;  // every leaf-vertex coordinate
  GradCheckResult chamfer;   // Chamfer distance to the target
  int params = 0;
  double max_rel_error() const { return std::max(vertices.max_rel_error, chamfer.max_rel_error); }
};

// Checks leaf-vertex and Chamfer gradients of `p` with respect to all its
// continuous operands. The Chamfer check freezes the sample plan and the
// nearest-neighbour correspondences found at `p`, which is exactly the
// quantity the reverse sweep differentiates.
inline ProgramGradCheck check_program_gradients(const Program& p, const PointCloud& target, double eps = 1e-5,
                                                int samples = 500, std::uint64_t seed = 0) {
  if (target.empty()) throw std::invalid_argument("gradcheck: empty target point cloud");
  ProgramGradCheck out;
  const std::vector<double> x = get_params(p);
  out.params = static_cast<int>(x.size());
  const KinkSignature kink = [&p](const std::vector<double>& v) { return program_kink_signature(p, v); };

  out.vertices = jacobian_check(
      [&p](const auto& v) {
        using S = typename std::decay_t<decltype(v)>::value_type;
        return detail::leaf_vertex_coords(detail::execute_with<S>(p, v));
      },
      x, eps, kink);

  const auto base = detail::execute_with<double>(p, x);
  std::vector<Cuboid> leaves;
  for (const auto& l : base.leaves) leaves.push_back(l.geom);
  const auto plan = plan_surface_samples(leaves, samples, seed);
  const std::vector<Vec3d> pts = apply_samples(leaves, plan);
  const PointGrid tgrid(target.points), pgrid(pts);
  const Correspondence corr{nearest_indices(pts, tgrid), nearest_indices(target.points, pgrid)};
  out.chamfer = finite_diff_check(
      [&](const auto& v) {
        using S = typename std::decay_t<decltype(v)>::value_type;
        const auto shape = detail::execute_with<S>(p, v);
        return chamfer_fixed(apply_samples(shape.leaf_geoms(), plan), target.points, corr);
      },
      x, eps, kink);
  return out;
}

}  // namespace shapeasm
