// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <set>
#include <string>

#include "shapeasm/io.hpp"
#include "support/support.hpp"

using namespace shapeasm;
namespace ts = testsupport;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const char* id, const char* what, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0 && secs > limit_s) {
    o.pass = false;
    o.detail += " (over time limit)";
  }
  if (!o.pass) ++failures;
  std::printf("%s %s: %s [%.2fs] %s\n", id, o.pass ? "PASS" : "FAIL", what, secs, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double max_corner_gap(const std::vector<Cuboid>& a, const std::vector<Cuboid>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto ca = corners(a[i]), cb = corners(b[i]);
    for (int k = 0; k < 8; ++k) worst = std::max(worst, norm(ca[k] - cb[k]));
  }
  return worst;
}

ExecState<double> bbox_state(const Vec3d& box) {
  ExecState<double> st;
  CuboidState<double> b;
  b.name = kBBox;
  b.decl = {kBBox, box.x, box.z, box.y, true};
  b.geom.dims = box;
  b.geom.aligned = true;
  b.grounded = true;
  b.template_name = kBBox;
  st.cuboids.push_back(b);
  return st;
}

double uni(std::mt19937_64& rng, double a, double b) { return a + (b - a) * unit_uniform(rng); }

Vec3d uni3(std::mt19937_64& rng, double a, double b) { return {uni(rng, a, b), uni(rng, a, b), uni(rng, a, b)}; }

Mat3d random_rotation(std::mt19937_64& rng) {
  Vec3d axis = uni3(rng, -1, 1);
  if (norm(axis) < 1e-3) axis = {0, 1, 0};
  return axis_angle(axis / norm(axis), uni(rng, -std::numbers::pi, std::numbers::pi));
}

// ---------------------------------------------------------------- AC1

Outcome ac1() {
  const auto [a, b] = expand_squeeze(Squeeze<double>{"c1", "c2", "c3", Face::Left, 0.1, 0.4});
  const std::string got = detail::attach_line(a) + "\n" + detail::attach_line(b);
  const std::string want =
      "attach(c1, c2, 0.000, 0.500, 0.500, 1.000, 0.100, 0.400)\n"
      "attach(c1, c3, 1.000, 0.500, 0.500, 0.000, 0.100, 0.400)";
  return {got == want, got == want ? "byte-equal" : "got:\n" + got};
}

// ---------------------------------------------------------------- AC2

Outcome ac2() {
  std::mt19937_64 rng(2024);
  int ok = 0, total = 0;
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const bool one_prior = i % 2 == 1;
    ExecState<double> st = bbox_state(uni3(rng, 0.5, 3.0));
    // A grounded partner in a random pose.
    CuboidState<double> anchor;
    anchor.name = "anchor";
    anchor.decl = {"anchor", 0.3, 0.3, 0.3, false};
    anchor.geom = make_cuboid(uni3(rng, 0.1, 0.8), uni3(rng, -0.5, 0.5), random_rotation(rng), false);
    anchor.grounded = true;
    st.cuboids.push_back(anchor);
    const Vec3d d = uni3(rng, 0.05, 1.0);
    // The colocation property covers aligned cuboids only for 0 priors.
    const bool aligned = !one_prior && unit_uniform(rng) < 0.5;
    instantiate(st, CuboidDecl<double>{"cube0", d.x, d.z, d.y, aligned}, 3, "");
    ExecDiagnostics diag;
    std::vector<Attach<double>> seq;
    seq.push_back({"cube0", kBBox, uni3(rng, 0, 1), uni3(rng, 0, 1)});
    if (one_prior) seq.push_back({"cube0", "anchor", uni3(rng, 0, 1), uni3(rng, 0, 1)});
    double gap = 0;
    for (const auto& a : seq) {
      apply_attach(st, a, diag);
      const Vec3d src = local_to_world(st.at("cube0").geom, a.p1);
      const Vec3d dst = local_to_world(st.at(a.c2).geom, a.p2);
      gap = norm(src - dst);
    }
    worst = std::max(worst, gap);
    ok += gap <= 1e-6;
    ++total;
  }
  return {ok == total, fmt("%.0f/%.0f colocated, worst gap %.3g", ok, total, worst)};
}

// ---------------------------------------------------------------- AC3

// Unit cube with three non-colinear prior attachments on its bottom face;
// the top-face centre is attached to a target `deg` off the face normal.
double tau_residual(double deg, bool& skipped) {
  ExecState<double> st = bbox_state({4, 4, 4});
  instantiate(st, CuboidDecl<double>{"cube0", 1, 1, 1, false}, 2, "");
  CuboidState<double>& c = st.at("cube0");
  for (const Vec3d& q : {Vec3d{0, 0, 0}, Vec3d{1, 0, 0}, Vec3d{0, 0, 1}})
    c.history.push_back({q, local_to_world(c.geom, q), kBBox, {0.5, 0.5, 0.5}});
  c.grounded = true;
  const double dist = 0.3, th = deg * std::numbers::pi / 180.0;
  const Vec3d target = Vec3d{0, 0.5, 0} + Vec3d{std::sin(th), std::cos(th), 0} * dist;
  ExecDiagnostics diag;
  apply_attach(st, Attach<double>{"cube0", kBBox, {0.5, 1, 0.5}, world_to_local(st.bbox().geom, target)}, diag);
  skipped = diag.has_warning("tau-skip");
  return norm(local_to_world(st.at("cube0").geom, Vec3d{0.5, 1, 0.5}) - target);
}

Outcome ac3() {
  bool skip20 = true, skip30 = false;
  const double r20 = tau_residual(20, skip20), r30 = tau_residual(30, skip30);
  const double want20 = 0.3 * std::sin(20 * std::numbers::pi / 180.0);
  // Scaling along the normal removes the normal component of the gap only;
  // without scaling the full gap remains.
  const bool pass = !skip20 && skip30 && std::abs(r20 - want20) < 1e-9 && std::abs(r30 - 0.3) < 1e-9;
  return {pass, fmt("residual at 20deg %.6f (scaled), at 30deg %.6f (unscaled)", r20, r30)};
}

// ---------------------------------------------------------------- AC4

Outcome ac4() {
  std::mt19937_64 rng(404);
  double worst = 0;
  int bad = 0;
  for (int i = 0; i < 200; ++i) {
    const Program p = ts::random_program(rng);
    const double gap = max_corner_gap(ts::leaves_of(p), ts::leaves_of(expand_program(p)));
    worst = std::max(worst, gap);
    bad += !(gap <= 1e-9);
  }
  return {bad == 0, fmt("%.0f/200 mismatched, worst corner gap %.3g", bad, worst)};
}

// ---------------------------------------------------------------- AC5

Outcome ac5() {
  std::mt19937_64 rng(505);
  double worst = 0;
  int bad = 0, excluded = 0, params = 0;
  for (int i = 0; i < 50; ++i) {
    const Program p = ts::random_program(rng);
    const Program other = ts::perturb_dims(p, rng, 0.1);
    const PointCloud target = sample_surface(ts::leaves_of(other), 400, i + 1);
    const ProgramGradCheck r = check_program_gradients(p, target, 1e-5, 300, i);
    worst = std::max(worst, r.max_rel_error());
    bad += !(r.max_rel_error() <= 1e-4);
    excluded += r.vertices.excluded_count();
    params += r.params;
  }
  return {bad == 0, fmt("%.0f/50 over tolerance, worst rel error %.3g, %.0f kink-excluded params", bad, worst, excluded) +
                        fmt(" of %.0f", params)};
}

// ---------------------------------------------------------------- AC6

Outcome ac6() {
  std::mt19937_64 rng(606);
  const auto& names = ts::sample_program_names();
  int bad = 0, nondet = 0;
  double worst = 101;
  for (int i = 0; i < 100; ++i) {
    Program p = ts::sample_program(names[i % names.size()]);
    if (i >= static_cast<int>(names.size())) p = ts::perturb_dims(p, rng, 0.1);
    const PartNode g = graph_from_shape(execute(p));
    const ExtractionResult a = extract_program(g);
    const ExtractionResult b = extract_program(g);
    if (print_program(a.program) != print_program(b.program)) ++nondet;
    const double f = std::min(a.report.fscore, ts::lattice_fscore(ts::leaves_of(a.program), leaf_boxes(g)));
    worst = std::min(worst, f);
    bad += !(f >= 99.0);
  }
  return {bad == 0 && nondet == 0, fmt("%.0f/100 below F 99 (worst %.2f), %.0f non-deterministic", bad, worst, nondet)};
}

// ---------------------------------------------------------------- AC7

Outcome ac7() {
  const std::string dir = ts::fixture_dir() + "/graphs/";
  std::string detail;
  bool pass = true;
  auto check = [&](const std::string& file, const std::string& reason, const ExtractionConfig& cfg) {
    const ExtractionResult r = extract_program(read_part_graph(dir + file), cfg);
    const bool ok = !r.report.pass && r.report.reasons == std::vector<std::string>{reason};
    pass = pass && ok;
    detail += file + "->" + (r.report.reasons.empty() ? "none" : r.report.reasons.front()) + " ";
  };
  ExtractionConfig table;
  table.rules = load_rules(ts::data_dir() + "/extraction_rules.json", "table");
  check("poor_fit.json", "fscore", table);
  check("floating.json", "components", {});
  check("out_of_bounds.json", "bounds", {});
  check("complexity_13.json", "complexity", {});
  return {pass, detail};
}

// ---------------------------------------------------------------- AC8

Outcome ac8() {
  const std::string dir = ts::fixture_dir() + "/semantics/";
  bool pass = true;
  int n = 0;
  std::string detail;
  for (const char* rule : {"coord-range", "bbox-attach-face", "dim-range", "bbox-subprogram", "single-attach",
                           "bbox-moved", "grounding", "symmetry-grounded", "containment"}) {
    std::set<std::string> hit;
    for (const auto& v : check_semantics(ts::load_program(dir + rule + ".sa"))) hit.insert(std::string(rule_name(v.rule)));
    const bool ok = hit == std::set<std::string>{rule};
    if (!ok) detail += std::string(rule) + " mismatched; ";
    pass = pass && ok;
    ++n;
  }
  try {
    ts::load_program(dir + "block-order.sa");
    pass = false;
    detail += "block-order parsed; ";
  } catch (const ParseError& e) {
    pass = pass && e.kind() == ParseErrorKind::BlockOrder;
    ++n;
  }
  const bool valid_ok = check_semantics(ts::load_program(dir + "valid.sa")).empty();
  if (!valid_ok) detail += "valid fixture flagged; ";
  return {pass && valid_ok, detail + fmt("%.0f rule fixtures + valid fixture", n)};
}

// ---------------------------------------------------------------- AC9

Outcome ac9() {
  const std::string dir = ts::fixture_dir() + "/metrics/";
  const json expected = json::parse(ts::slurp(dir + "expected.json"));
  bool pass = expected.size() >= 4;
  int rooted = 0, stable = 0;
  std::string detail;
  for (const auto& [name, want] : expected.items()) {
    const StabilityReport r = stability(leaf_boxes(read_part_graph(dir + name + ".json")));
    const bool ok = r.rooted == want["rooted"].get<bool>() && r.stable == want["stable"].get<bool>() && (!r.stable || r.rooted);
    if (!ok) detail += name + " misclassified; ";
    pass = pass && ok;
    rooted += r.rooted;
    stable += r.stable;
  }
  return {pass, detail + fmt("%.0f fixtures, %.0f rooted, %.0f stable", expected.size(), rooted, stable)};
}

// ---------------------------------------------------------------- AC10

Outcome ac10() {
  std::mt19937_64 rng(1010);
  const auto& names = ts::sample_program_names();
  int good = 0, sig_bad = 0, invalid = 0;
  double worst = 0;
  std::vector<FitReport> reports;
  for (int i = 0; i < 20; ++i) {
    const Program truth = ts::sample_program(names[i % names.size()]);
    const Program start = ts::perturb_dims(truth, rng, 0.1);
    FitConfig cfg;
    cfg.iterations = 500;
    // Target drawn with the fit's fixed sampling seed, so the unperturbed
    // program scores exactly zero.
    const PointCloud target = sample_surface(ts::leaves_of(truth), cfg.samples, cfg.seed);
    const auto [out, rep] = fit_continuous(start, target, cfg);
    const double ratio = rep.initial_chamfer > 0 ? rep.final_chamfer / rep.initial_chamfer : 0.0;
    worst = std::max(worst, ratio);
    good += ratio < 0.25;
    sig_bad += structural_signature(out) != structural_signature(start);
    invalid += has_errors(check_semantics(out));
    reports.push_back(rep);
  }
  const FitSummary sum = fit_report_table(reports);
  const bool pass = good >= 18 && sig_bad == 0 && invalid == 0;
  return {pass, fmt("%.0f/20 reached < 0.25x initial Chamfer (worst ratio %.3f), ", good, worst) +
                    fmt("%.0f signature changes, %.0f invalid outputs, ", sig_bad, invalid) +
                    fmt("F-score improved on %.0f%%", sum.pct_fscore_improved)};
}

// ---------------------------------------------------------------- AC11

Outcome ac11() {
  int checked = 0, bad = 0;
  auto roundtrip = [&](const Program& p) {
    const std::string text = print_program(p);
    const Program q = parse_program(text);
    const bool ok = print_program(q) == text && get_params(q) == get_params(p) &&
                    structural_signature(q) == structural_signature(p);
    bad += !ok;
    ++checked;
  };
  std::vector<std::string> files;
  for (const auto& name : ts::sample_program_names()) files.push_back(ts::data_dir() + "/programs/" + name + ".sa");
  for (const char* sub : {"semantics", "programs"})
    for (const auto& e : std::filesystem::directory_iterator(ts::fixture_dir() + "/" + sub))
      if (e.path().extension() == ".sa" && e.path().stem() != "block-order") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) roundtrip(ts::load_program(f));
  std::mt19937_64 rng(1111);
  for (int i = 0; i < 1000; ++i) roundtrip(ts::random_program(rng));

  int axiom_bad = 0;
  ts::RandomProgramOptions small;
  small.max_cuboids = 3;
  for (int i = 0; i < 1000; ++i) {
    const Program a = ts::random_program(rng, small), b = ts::random_program(rng, small), c = ts::random_program(rng, small);
    const int ab = token_edit_distance(a, b), ba = token_edit_distance(b, a), bc = token_edit_distance(b, c),
              ac = token_edit_distance(a, c);
    const bool same = program_tokens(a) == program_tokens(b);
    const bool ok = token_edit_distance(a, a) == 0 && ab == ba && (same ? ab == 0 : ab > 0) && ac <= ab + bc && ab >= 0;
    axiom_bad += !ok;
  }
  return {bad == 0 && axiom_bad == 0, fmt("%.0f programs round-tripped (%.0f failed), %.0f axiom violations", checked, bad, axiom_bad)};
}

}  // namespace

int main() {
  report("AC1", "squeeze expansion worked example", 1, ac1);
  report("AC2", "attach colocation, 1000 cases", 10, ac2);
  report("AC3", "tau rule at 20 and 30 degrees", 0, ac3);
  report("AC4", "macro expansion equivalence, 200 programs", 60, ac4);
  report("AC5", "gradients vs central differences, 50 programs", 300, ac5);
  report("AC6", "extraction round trip, 100 graphs", 300, ac6);
  report("AC7", "validation gates", 0, ac7);
  report("AC8", "semantic validity fixtures", 0, ac8);
  report("AC9", "rootedness and stability fixtures", 0, ac9);
  report("AC10", "fitting regression, 20 perturbed programs", 600, ac10);
  report("AC11", "parser round trip and edit-distance axioms", 0, ac11);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
