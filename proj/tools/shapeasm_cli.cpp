// shapeasm: command-line front end for parsing, executing, extracting,
// fitting and scoring ShapeAssembly programs.
//
// Exit codes: 0 success, 1 validation failure, 2 usage or input error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "shapeasm/io.hpp"
#include "shapeasm/shapeasm.hpp"

namespace sa = shapeasm;
using sa::json;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kUsage = 2;

// Missing or unreadable inputs are usage errors.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_input(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) throw InputError("cannot read " + path);
  return sa::read_text_file(path);
}

sa::Program load_program(const std::string& path) { return sa::parse_program(read_input(path)); }

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path);
  f << text;
}

void print_warnings(const sa::ExecDiagnostics& d) {
  for (const auto& w : d.warnings) {
    std::cerr << "warning [" << w.code << "]" << (w.path.empty() ? "" : " " + w.path) << ": " << w.message << "\n";
  }
}

std::vector<sa::Cuboid> leaf_geoms(const sa::ExecutedShape<double>& s) {
  std::vector<sa::Cuboid> out;
  for (const auto& l : s.leaves) out.push_back(l.geom);
  return out;
}

struct Options {
  std::uint64_t seed = 0;

  std::string program;
  std::string program_b;
  std::vector<std::string> programs;
  std::string out;

  std::string mode = "hier";
  std::string obj_path;
  std::string pts_path;
  std::string trace_path;
  int n_points = 2000;

  std::string graph;
  std::string config;
  std::string rules;
  std::string category;
  std::string report;

  std::string target;
  int iters = 500;
  double lr = 0.01;
  std::string mask = "all";
  int samples = 2000;
  std::string trace_csv;
  bool opt_cuboids = false;

  double eps = 1e-5;
  double tolerance = 1e-4;
};

int cmd_parse(const Options& o) {
  write_text(o.out, sa::print_program(load_program(o.program)));
  return kOk;
}

int cmd_check(const Options& o) {
  const auto vs = sa::check_semantics(load_program(o.program));
  json out = json::array();
  for (const auto& v : vs) out.push_back(sa::to_json(v));
  std::cout << json{{"violations", out}, {"valid", !sa::has_errors(vs)}}.dump(2) << "\n";
  return sa::has_errors(vs) ? kInvalid : kOk;
}

int cmd_expand(const Options& o) {
  write_text(o.out, sa::print_program(sa::expand_program(load_program(o.program))));
  return kOk;
}

int cmd_run(const Options& o) {
  const sa::Program p = load_program(o.program);
  sa::ExecOptions opt;
  opt.mode = o.mode == "flat" ? sa::ExecMode::Flat : sa::ExecMode::Hierarchical;
  opt.record_trace = !o.trace_path.empty();
  const auto shape = sa::execute(p, opt);
  print_warnings(shape.diagnostics);
  if (!o.obj_path.empty()) {
    std::ofstream f(o.obj_path);
    if (!f) throw InputError("cannot write " + o.obj_path);
    sa::write_obj(f, shape);
  }
  if (!o.pts_path.empty()) {
    std::ofstream f(o.pts_path);
    if (!f) throw InputError("cannot write " + o.pts_path);
    sa::write_xyz(f, sa::sample_surface(leaf_geoms(shape), o.n_points, o.seed));
  }
  if (!o.trace_path.empty()) {
    std::ofstream f(o.trace_path);
    if (!f) throw InputError("cannot write " + o.trace_path);
    sa::write_trace_jsonl(f, shape.trace);
  }
  std::cout << json{{"leaves", shape.leaves.size()}, {"warnings", shape.diagnostics.warnings.size()}, {"seed", o.seed}}.dump()
            << "\n";
  return kOk;
}

sa::ExtractionConfig extraction_config(const Options& o) {
  sa::ExtractionConfig cfg;
  if (!o.config.empty()) {
    json j;
    try {
      j = json::parse(read_input(o.config));
    } catch (const json::exception& e) {
      throw sa::FormatError(o.config + ": " + e.what());
    }
    cfg.fscore_min = j.value("fscore_min", cfg.fscore_min);
    cfg.max_leaf_cuboids = j.value("max_leaf_cuboids", cfg.max_leaf_cuboids);
    cfg.align_angle_deg = j.value("align_angle_deg", cfg.align_angle_deg);
    cfg.symmetry_length_frac = j.value("symmetry_length_frac", cfg.symmetry_length_frac);
    cfg.symmetry_angle_deg = j.value("symmetry_angle_deg", cfg.symmetry_angle_deg);
    cfg.face_center_snap = j.value("face_center_snap", cfg.face_center_snap);
    cfg.bbox_band = j.value("bbox_band", cfg.bbox_band);
    cfg.max_orders = j.value("max_orders", cfg.max_orders);
    cfg.symmetries = j.value("symmetries", cfg.symmetries);
    cfg.squeezes = j.value("squeezes", cfg.squeezes);
    if (j.contains("rules")) cfg.rules = sa::rules_from_json(j["rules"]);
  }
  if (!o.rules.empty()) {
    if (o.category.empty()) throw CLI::ValidationError("--rules needs --category");
    if (!std::filesystem::is_regular_file(o.rules)) throw InputError("cannot read " + o.rules);
    cfg.rules = sa::load_rules(o.rules, o.category);
  }
  return cfg;
}

int cmd_extract(const Options& o) {
  if (!std::filesystem::is_regular_file(o.graph)) throw InputError("cannot read " + o.graph);
  const sa::PartNode g = sa::read_part_graph(o.graph);
  const sa::ExtractionResult r = sa::extract_program(g, extraction_config(o));
  write_text(o.out, sa::print_program(r.program));
  json rep = sa::to_json(r.report);
  rep["seed"] = o.seed;
  if (!o.report.empty()) write_text(o.report, rep.dump(2) + "\n");
  else std::cerr << rep.dump() << "\n";
  for (const auto& reason : r.report.reasons) std::cerr << "validation failed: " << reason << "\n";
  return r.report.pass ? kOk : kInvalid;
}

int cmd_fit(const Options& o) {
  const sa::Program p = load_program(o.program);
  if (!std::filesystem::is_regular_file(o.target)) throw InputError("cannot read " + o.target);
  const sa::PointCloud target = sa::read_xyz(o.target);
  sa::FitConfig cfg;
  cfg.iterations = o.iters;
  cfg.step_size = o.lr;
  cfg.mask = sa::parse_fit_mask(o.mask);
  cfg.samples = o.samples;
  cfg.seed = o.seed;
  sa::FitReport rep;
  if (o.opt_cuboids) {
    const auto shape = sa::execute(p);
    auto [boxes, r] = sa::fit_cuboids(leaf_geoms(shape), target, cfg);
    rep = r;
    if (!o.out.empty()) {
      std::ofstream f(o.out);
      if (!f) throw InputError("cannot write " + o.out);
      sa::write_obj(f, boxes);
    }
  } else {
    auto [fitted, r] = sa::fit_continuous(p, target, cfg);
    rep = r;
    write_text(o.out, sa::print_program(fitted));
  }
  json j = sa::to_json(rep);
  j["mask"] = sa::fit_mask_name(cfg.mask);
  if (!o.report.empty()) write_text(o.report, j.dump(2) + "\n");
  if (!o.trace_csv.empty()) {
    std::ofstream f(o.trace_csv);
    if (!f) throw InputError("cannot write " + o.trace_csv);
    sa::write_fit_trace_csv(f, rep);
  }
  std::cerr << "chamfer " << rep.initial_chamfer << " -> " << rep.final_chamfer << " (" << rep.iterations_run
            << " iterations)\n";
  if (rep.aborted) std::cerr << "fit aborted: " << rep.abort_reason << "\n";
  return kOk;
}

int cmd_score(const Options& o) {
  json shapes = json::array();
  std::vector<std::vector<sa::Cuboid>> all;
  for (const auto& path : o.programs) {
    const sa::Program p = load_program(path);
    const auto shape = sa::execute(p);
    print_warnings(shape.diagnostics);
    const auto leaves = leaf_geoms(shape);
    if (leaves.empty()) throw sa::ExecutionError(sa::Rule::Grounding, path + ": no grounded leaf cuboids");
    sa::ProgramStats stats = sa::program_stats(p);
    stats.expanded_leaf_count = static_cast<int>(leaves.size());
    const sa::StabilityReport st = sa::stability(leaves);
    json j = sa::to_json(st);
    j["file"] = path;
    j["stats"] = sa::to_json(stats);
    shapes.push_back(j);
    all.push_back(leaves);
  }
  json out{{"shapes", shapes}, {"summary", sa::to_json(sa::quality_suite(all))}, {"seed", o.seed}};
  std::cout << out.dump(2) << "\n";
  return kOk;
}

int cmd_diff(const Options& o) {
  const sa::Program a = load_program(o.program), b = load_program(o.program_b);
  std::cout << json{{"distance", sa::token_edit_distance(a, b)},
                    {"structurally_equal", sa::structural_signature(a) == sa::structural_signature(b)}}
                   .dump()
            << "\n";
  return kOk;
}

int cmd_gradcheck(const Options& o) {
  const sa::Program p = load_program(o.program);
  sa::PointCloud target;
  if (!o.target.empty()) {
    if (!std::filesystem::is_regular_file(o.target)) throw InputError("cannot read " + o.target);
    target = sa::read_xyz(o.target);
  } else {
    // Default target: the shape's own surface, scaled by 5% about its centroid.
    auto leaves = leaf_geoms(sa::execute(p));
    sa::Vec3d c{0, 0, 0};
    for (const auto& l : leaves) c += l.pose.center;
    c = c / static_cast<double>(std::max<std::size_t>(leaves.size(), 1));
    for (auto& l : leaves) {
      l.pose.center = c + (l.pose.center - c) * 1.05;
      l.dims = l.dims * 1.05;
    }
    target = sa::sample_surface(leaves, o.samples, o.seed + 1);
  }
  const auto r = sa::check_program_gradients(p, target, o.eps, o.samples, o.seed);
  const bool ok = r.max_rel_error() <= o.tolerance;
  std::cout << json{{"params", r.params},
                    {"excluded", r.vertices.excluded_count()},
                    {"vertex_outputs", r.vertices.outputs},
                    {"vertex_max_rel_error", r.vertices.max_rel_error},
                    {"chamfer_max_rel_error", r.chamfer.max_rel_error},
                    {"tolerance", o.tolerance},
                    {"pass", ok},
                    {"seed", o.seed}}
                   .dump(2)
            << "\n";
  return ok ? kOk : kInvalid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ShapeAssembly toolchain"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--seed", o.seed, "Seed for all sampling")->capture_default_str();

  auto* parse = app.add_subcommand("parse", "Parse a program and print it canonically");
  parse->add_option("program", o.program)->required();
  parse->add_option("-o,--out", o.out, "Output path (default stdout)");

  auto* check = app.add_subcommand("check", "Report semantic-validity violations");
  check->add_option("program", o.program)->required();

  auto* expand = app.add_subcommand("expand", "Print the macro-expanded program");
  expand->add_option("program", o.program)->required();
  expand->add_option("-o,--out", o.out);

  auto* run = app.add_subcommand("run", "Execute a program");
  run->add_option("program", o.program)->required();
  run->add_option("--mode", o.mode)->check(CLI::IsMember({"flat", "hier"}))->capture_default_str();
  run->add_option("--export-obj", o.obj_path);
  run->add_option("--export-pts", o.pts_path);
  run->add_option("--n", o.n_points, "Surface samples for --export-pts")->check(CLI::Range(6, 100000000))->capture_default_str();
  run->add_option("--trace", o.trace_path, "Write the execution trace as JSON lines");

  auto* extract = app.add_subcommand("extract", "Extract a program from a part graph");
  extract->add_option("graph", o.graph)->required();
  extract->add_option("--config", o.config, "Extraction config JSON");
  extract->add_option("--rules", o.rules, "Rules file with per-category rule sets");
  extract->add_option("--category", o.category);
  extract->add_option("-o,--out", o.out);
  extract->add_option("--report", o.report);

  auto* fit = app.add_subcommand("fit", "Fit continuous parameters to a point cloud");
  fit->add_option("program", o.program)->required();
  fit->add_option("target", o.target, "Target points, one 'x y z' per line")->required();
  fit->add_option("--iters", o.iters)->check(CLI::PositiveNumber)->capture_default_str();
  fit->add_option("--lr", o.lr)->check(CLI::PositiveNumber)->capture_default_str();
  fit->add_option("--mask", o.mask, "all | dims | attach | translate, comma separated")->capture_default_str();
  fit->add_option("--samples", o.samples)->check(CLI::Range(6, 100000000))->capture_default_str();
  fit->add_option("--report", o.report);
  fit->add_option("--trace-csv", o.trace_csv);
  fit->add_option("-o,--out", o.out);
  fit->add_flag("--opt-cuboids", o.opt_cuboids, "Approximate baseline: optimise raw leaf boxes (writes OBJ)");

  auto* score = app.add_subcommand("score", "Rootedness, stability and program statistics");
  score->add_option("programs", o.programs)->required();

  auto* diff = app.add_subcommand("diff", "Token edit distance between two programs");
  diff->add_option("a", o.program)->required();
  diff->add_option("b", o.program_b)->required();

  auto* grad = app.add_subcommand("gradcheck", "Compare gradients with central finite differences");
  grad->add_option("program", o.program)->required();
  grad->add_option("--target", o.target);
  grad->add_option("--eps", o.eps)->check(CLI::PositiveNumber)->capture_default_str();
  grad->add_option("--tolerance", o.tolerance)->capture_default_str();
  grad->add_option("--samples", o.samples)->check(CLI::Range(6, 100000000))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*parse) return cmd_parse(o);
    if (*check) return cmd_check(o);
    if (*expand) return cmd_expand(o);
    if (*run) return cmd_run(o);
    if (*extract) return cmd_extract(o);
    if (*fit) return cmd_fit(o);
    if (*score) return cmd_score(o);
    if (*diff) return cmd_diff(o);
    if (*grad) return cmd_gradcheck(o);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const sa::FormatError& e) {
    std::cerr << "error: malformed input: " << e.what() << "\n";
    return kUsage;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const sa::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const sa::ExecutionError& e) {
    std::cerr << "error [" << sa::rule_name(e.rule()) << "]: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
  return kUsage;
}
