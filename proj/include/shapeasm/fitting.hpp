#pragma once

// Gradient-based refinement of a program's continuous parameters against a
// target point cloud, through the differentiable interpreter.

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "shapeasm/autodiff.hpp"
#include "shapeasm/interpreter.hpp"
#include "shapeasm/metrics.hpp"
#include "shapeasm/point_cloud.hpp"
#include "shapeasm/program.hpp"
#include "shapeasm/semantics.hpp"

namespace shapeasm {

struct FitMask {
  bool dims = true;
  bool attach = true;     // attach and squeeze coordinates
  bool translate = true;  // translate distances

  bool selects(ParamKind k) const {
    switch (k) {
      case ParamKind::BBoxDim: return false;
      case ParamKind::Dim: return dims;
      case ParamKind::AttachCoord:
      case ParamKind::SqueezeCoord: return attach;
      case ParamKind::TranslateDist: return translate;
    }
    return false;
  }
};

// Parses "all", "dims", "attach", "translate" or a comma-separated mix.
inline FitMask parse_fit_mask(const std::string& text) {
  FitMask m{false, false, false};
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, end - start);
    if (item == "all") {
      m = FitMask{};
    } else if (item == "dims") {
      m.dims = true;
    } else if (item == "attach") {
      m.attach = true;
    } else if (item == "translate") {
      m.translate = true;
    } else {
      throw std::invalid_argument("unknown fit mask entry '" + item + "'");
    }
    start = end + 1;
  }
  return m;
}

inline std::string fit_mask_name(const FitMask& m) {
  if (m.dims && m.attach && m.translate) return "all";
  std::string out;
  auto add = [&](bool on, const char* s) {
    if (!on) return;
    if (!out.empty()) out += ",";
    out += s;
  };
  add(m.dims, "dims");
  add(m.attach, "attach");
  add(m.translate, "translate");
  return out.empty() ? "none" : out;
}

struct FitConfig {
  int iterations = 500;
  double step_size = 0.01;
  FitMask mask;
  int samples = 2000;
  double tolerance = 1e-7;  // stop once the Chamfer distance reaches this value
  std::uint64_t seed = 0;
  double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
};

struct FitTraceRow {
  int iteration = 0;
  double chamfer = 0;
  double step_size = 0;
};

struct ParamDelta {
  std::string path;
  std::string name;
  double before = 0;
  double after = 0;
};

struct FitReport {
  std::string variant = "program";
  std::uint64_t seed = 0;
  double initial_chamfer = 0, final_chamfer = 0;
  double initial_fscore = 0, final_fscore = 0;
  double fscore_threshold = 0;
  bool rooted_before = false, rooted_after = false;
  bool stable_before = false, stable_after = false;
  int iterations_run = 0;
  int best_iteration = 0;
  bool aborted = false;
  std::string abort_reason;
  std::vector<ParamDelta> deltas;
  std::vector<FitTraceRow> trace;
};

namespace detail {

struct ShapeScore {
  double chamfer = 0;
  double fscore = 0;
  bool rooted = false;
  bool stable = false;
};

inline ShapeScore score_leaves(const std::vector<Cuboid>& leaves, const PointCloud& target, const PointGrid& grid,
                               int samples, std::uint64_t seed, double threshold) {
  ShapeScore s;
  const PointCloud pc = sample_surface(leaves, samples, seed);
  s.chamfer = chamfer(pc.points, target.points, &grid);
  s.fscore = f_score(pc, target, threshold);
  const StabilityReport st = stability(leaves);
  s.rooted = st.rooted;
  s.stable = st.stable;
  return s;
}

inline std::vector<Cuboid> executed_leaves(const Program& p) {
  ExecOptions opt;
  opt.build_expanded = false;
  std::vector<Cuboid> out;
  for (const auto& l : execute(p, opt).leaves) out.push_back(l.geom);
  return out;
}

// Returns the Chamfer loss and writes the gradient for the selected entries.
inline double program_loss(const Program& p, const std::vector<int>& selected, const PointCloud& target,
                           const PointGrid& grid, int samples, std::uint64_t seed, std::vector<double>& grad) {
  ad::Tape tape;
  BasicProgram<ad::Var> vp = program_cast<ad::Var>(p);
  const std::vector<double> values = get_params(p);
  std::vector<ad::Var> roots;
  std::vector<ad::Var> all(values.begin(), values.end());
  for (int idx : selected) {
    all[idx] = ad::Var(values[idx], &tape, tape.new_root());
    roots.push_back(all[idx]);
  }
  set_params(vp, all);
  ExecOptions opt;
  opt.build_expanded = false;
  const ExecutedShape<ad::Var> shape = execute(vp, opt);
  const std::vector<CuboidGeom<ad::Var>> geoms = shape.leaf_geoms();
  std::vector<Cuboid> primal;
  for (const auto& g : geoms) primal.push_back(geom_cast<double>(g));
  if (primal.empty()) throw ExecutionError(Rule::Grounding, "program produced no leaf cuboids");
  const auto plan = plan_surface_samples(primal, samples, seed);
  const std::vector<Vec3<ad::Var>> pts = apply_samples(geoms, plan);
  const ad::Var loss = chamfer(pts, target.points, &grid);
  grad.assign(selected.size(), 0.0);
  if (!loss.is_constant()) grad = ad::gradient(loss, roots);
  return loss.value();
}

}  // namespace detail

// Adam on the masked parameters with re-clamping after each step; the best
// iterate is returned. The command sequence and discrete operands are never
// touched.
inline std::pair<Program, FitReport> fit_continuous(const Program& program, const PointCloud& target,
                                                    const FitConfig& cfg) {
  if (cfg.iterations < 1) throw std::invalid_argument("fit: iterations must be at least 1");
  if (!(cfg.step_size > 0)) throw std::invalid_argument("fit: step size must be positive");
  if (cfg.samples < 6) throw std::invalid_argument("fit: need at least 6 surface samples");
  if (target.empty()) throw std::invalid_argument("fit: empty target point cloud");

  Program current = program;
  repair_ranges(current);
  const std::vector<ParamInfo> infos = param_infos(current);
  std::vector<int> selected;
  for (std::size_t i = 0; i < infos.size(); ++i)
    if (cfg.mask.selects(infos[i].kind)) selected.push_back(static_cast<int>(i));

  FitReport rep;
  rep.seed = cfg.seed;
  rep.fscore_threshold = default_fscore_threshold(target);
  const PointGrid grid(target.points);

  const detail::ShapeScore before =
      detail::score_leaves(detail::executed_leaves(current), target, grid, cfg.samples, cfg.seed, rep.fscore_threshold);
  rep.initial_chamfer = before.chamfer;
  rep.initial_fscore = before.fscore;
  rep.rooted_before = before.rooted;
  rep.stable_before = before.stable;

  std::vector<double> x = get_params(current);
  const std::vector<double> x0 = x;
  std::vector<double> best = x;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<double> m(selected.size(), 0.0), v(selected.size(), 0.0);
  double lr = cfg.step_size;
  int t = 0;
  std::vector<double> grad;
  std::vector<double> prev = x;

  for (int it = 0; it < cfg.iterations; ++it) {
    Program trial = program;
    set_params(trial, x);
    double loss = 0;
    try {
      loss = detail::program_loss(trial, selected, target, grid, cfg.samples, cfg.seed, grad);
    } catch (const std::exception& e) {
      rep.aborted = true;
      rep.abort_reason = e.what();
      break;
    }
    bool finite = std::isfinite(loss);
    for (double g : grad) finite = finite && std::isfinite(g);
    if (!finite) {
      // Reject the step that led here and retry from the previous point.
      x = prev;
      lr *= 0.5;
      rep.trace.push_back({it, loss, lr});
      rep.iterations_run = it + 1;
      continue;
    }
    if (loss < best_loss) {
      best_loss = loss;
      best = x;
      rep.best_iteration = it;
    }
    rep.trace.push_back({it, loss, lr});
    rep.iterations_run = it + 1;
    if (loss <= cfg.tolerance || selected.empty()) break;

    prev = x;
    ++t;
    const double c1 = 1.0 - std::pow(cfg.beta1, t), c2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t k = 0; k < selected.size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1 - cfg.beta1) * grad[k];
      v[k] = cfg.beta2 * v[k] + (1 - cfg.beta2) * grad[k] * grad[k];
      x[selected[k]] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg.epsilon);
    }
    Program stepped = program;
    set_params(stepped, x);
    repair_ranges(stepped);
    x = get_params(stepped);
  }

  Program out = program;
  if (std::isfinite(best_loss)) set_params(out, best);
  repair_ranges(out);
  const detail::ShapeScore after =
      detail::score_leaves(detail::executed_leaves(out), target, grid, cfg.samples, cfg.seed, rep.fscore_threshold);
  rep.final_chamfer = std::min(after.chamfer, rep.initial_chamfer);
  if (after.chamfer > rep.initial_chamfer) {
    // The clamped start was the best iterate after all.
    out = program;
    repair_ranges(out);
    rep.final_chamfer = rep.initial_chamfer;
    rep.final_fscore = before.fscore;
    rep.rooted_after = before.rooted;
    rep.stable_after = before.stable;
  } else {
    rep.final_fscore = after.fscore;
    rep.rooted_after = after.rooted;
    rep.stable_after = after.stable;
  }
  const std::vector<double> xf = get_params(out);
  for (std::size_t i = 0; i < xf.size(); ++i) {
    if (xf[i] != x0[i]) rep.deltas.push_back({infos[i].path, infos[i].text, x0[i], xf[i]});
  }
  return {out, rep};
}

// Approximate "optimise raw cuboids" baseline: every executed leaf box is an
// independent (centre, dims) block with fixed orientation, so no attachment
// or symmetry constraint survives the optimisation.
inline std::pair<std::vector<Cuboid>, FitReport> fit_cuboids(const std::vector<Cuboid>& leaves, const PointCloud& target,
                                                             const FitConfig& cfg) {
  if (cfg.iterations < 1) throw std::invalid_argument("fit: iterations must be at least 1");
  if (!(cfg.step_size > 0)) throw std::invalid_argument("fit: step size must be positive");
  if (leaves.empty() || target.empty()) throw std::invalid_argument("fit: empty input");
  FitReport rep;
  rep.variant = "opt-cuboids (approximate)";
  rep.seed = cfg.seed;
  rep.fscore_threshold = default_fscore_threshold(target);
  const PointGrid grid(target.points);
  const detail::ShapeScore before = detail::score_leaves(leaves, target, grid, cfg.samples, cfg.seed, rep.fscore_threshold);
  rep.initial_chamfer = before.chamfer;
  rep.initial_fscore = before.fscore;
  rep.rooted_before = before.rooted;
  rep.stable_before = before.stable;

  const std::size_t n = leaves.size() * 6;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < leaves.size(); ++i)
    for (int k = 0; k < 3; ++k) {
      x[6 * i + k] = leaves[i].pose.center[k];
      x[6 * i + 3 + k] = leaves[i].dims[k];
    }
  auto build = [&](const auto& vals, auto tag) {
    using S = decltype(tag);
    std::vector<CuboidGeom<S>> out;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      CuboidGeom<S> g = geom_cast<S>(leaves[i]);
      for (int k = 0; k < 3; ++k) {
        g.pose.center[k] = vals[6 * i + k];
        g.dims[k] = vals[6 * i + 3 + k];
      }
      out.push_back(g);
    }
    return out;
  };
  std::vector<double> best = x, m(n, 0.0), v(n, 0.0);
  double best_loss = std::numeric_limits<double>::infinity();
  double lr = cfg.step_size;
  for (int it = 0; it < cfg.iterations; ++it) {
    ad::Tape tape;
    const std::vector<ad::Var> roots = ad::lift(x, tape);
    const auto geoms = build(roots, ad::Var{});
    const auto primal = build(x, 0.0);
    const auto plan = plan_surface_samples(primal, cfg.samples, cfg.seed);
    const ad::Var loss = chamfer(apply_samples(geoms, plan), target.points, &grid);
    std::vector<double> g = ad::gradient(loss, roots);
    rep.trace.push_back({it, loss.value(), lr});
    rep.iterations_run = it + 1;
    if (!std::isfinite(loss.value())) {
      x = best;
      lr *= 0.5;
      continue;
    }
    if (loss.value() < best_loss) {
      best_loss = loss.value();
      best = x;
      rep.best_iteration = it;
    }
    if (loss.value() <= cfg.tolerance) break;
    const int t = it + 1;
    const double c1 = 1.0 - std::pow(cfg.beta1, t), c2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t k = 0; k < n; ++k) {
      m[k] = cfg.beta1 * m[k] + (1 - cfg.beta1) * g[k];
      v[k] = cfg.beta2 * v[k] + (1 - cfg.beta2) * g[k] * g[k];
      x[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg.epsilon);
      if (k % 6 >= 3) x[k] = std::max(x[k], kMinDim);
    }
  }
  const std::vector<Cuboid> out = build(best, 0.0);
  const detail::ShapeScore after = detail::score_leaves(out, target, grid, cfg.samples, cfg.seed, rep.fscore_threshold);
  rep.final_chamfer = after.chamfer;
  rep.final_fscore = after.fscore;
  rep.rooted_after = after.rooted;
  rep.stable_after = after.stable;
  return {out, rep};
}

struct FitSummary {
  int count = 0;
  double mean_fscore_before = 0, mean_fscore_after = 0;
  double pct_rooted_before = 0, pct_rooted_after = 0;
  double pct_stable_before = 0, pct_stable_after = 0;
  double pct_fscore_improved = 0;
  double mean_chamfer_ratio = 0;  // final / initial, over reports with a non-zero start
};

inline FitSummary fit_report_table(const std::vector<FitReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("fit_report_table: no reports");
  FitSummary s;
  s.count = static_cast<int>(reports.size());
  int ratio_n = 0;
  for (const FitReport& r : reports) {
    s.mean_fscore_before += r.initial_fscore;
    s.mean_fscore_after += r.final_fscore;
    s.pct_rooted_before += r.rooted_before;
    s.pct_rooted_after += r.rooted_after;
    s.pct_stable_before += r.stable_before;
    s.pct_stable_after += r.stable_after;
    s.pct_fscore_improved += r.final_fscore > r.initial_fscore;
    if (r.initial_chamfer > 0) {
      s.mean_chamfer_ratio += r.final_chamfer / r.initial_chamfer;
      ++ratio_n;
    }
  }
  const double n = s.count;
  s.mean_fscore_before /= n;
  s.mean_fscore_after /= n;
  s.pct_rooted_before *= 100.0 / n;
  s.pct_rooted_after *= 100.0 / n;
  s.pct_stable_before *= 100.0 / n;
  s.pct_stable_after *= 100.0 / n;
  s.pct_fscore_improved *= 100.0 / n;
  if (ratio_n > 0) s.mean_chamfer_ratio /= ratio_n;
  return s;
}

inline void write_fit_trace_csv(std::ostream& out, const FitReport& r) {
  out << "iteration,chamfer,step_size\n";
  char buf[96];
  for (const auto& row : r.trace) {
    std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g\n", row.iteration, row.chamfer, row.step_size);
    out << buf;
  }
}

}  // namespace shapeasm
