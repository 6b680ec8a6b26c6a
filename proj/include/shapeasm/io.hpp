#pragma once

// JSON documents: part graphs, extraction rules, and machine-readable reports.
// Requires nlohmann/json (vendored as json.hpp).

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "shapeasm/extraction.hpp"
#include "shapeasm/fitting.hpp"
#include "shapeasm/metrics.hpp"
#include "shapeasm/part_graph.hpp"
#include "shapeasm/program_tools.hpp"

namespace shapeasm {

using json = nlohmann::json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// ------------------------------------------------------------ part graphs

// Box dims are listed in program text order (l, w, h); the quaternion is
// (w, x, y, z).
inline json box_to_json(const Cuboid& c) {
  const auto q = rotation_to_quat(c.pose.rotation);
  return json{{"dims", {c.dims.x, c.dims.z, c.dims.y}},
              {"center", {c.pose.center.x, c.pose.center.y, c.pose.center.z}},
              {"quat", {q[0], q[1], q[2], q[3]}}};
}

inline Cuboid box_from_json(const json& j) {
  auto triple = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_array() || j[key].size() != 3) {
      throw FormatError(std::string("box: '") + key + "' must be an array of 3 numbers");
    }
    Vec3d v;
    for (int i = 0; i < 3; ++i) {
      if (!j[key][i].is_number()) throw FormatError(std::string("box: '") + key + "' must hold numbers");
      v[i] = j[key][i].get<double>();
    }
    return v;
  };
  if (!j.is_object()) throw FormatError("box must be an object");
  const Vec3d d = triple("dims");
  if (!(d.x > 0 && d.y > 0 && d.z > 0)) throw FormatError("box: dims must be positive");
  Cuboid c;
  c.dims = {d.x, d.z, d.y};
  c.pose.center = triple("center");
  if (j.contains("quat")) {
    const json& q = j["quat"];
    if (!q.is_array() || q.size() != 4) throw FormatError("box: 'quat' must be an array of 4 numbers");
    for (const auto& x : q)
      if (!x.is_number()) throw FormatError("box: 'quat' must hold numbers");
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    if (std::sqrt(w * w + x * x + y * y + z * z) < 1e-12) throw FormatError("box: zero quaternion");
    c.pose.rotation = quat_to_rotation(w, x, y, z);
  }
  c.aligned = false;
  return c;
}

inline json part_graph_to_json(const PartNode& n) {
  json j{{"id", n.id}, {"label", n.label}, {"box", box_to_json(n.box)}};
  json kids = json::array();
  for (const auto& c : n.children) kids.push_back(part_graph_to_json(c));
  j["children"] = std::move(kids);
  return j;
}

inline PartNode part_graph_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("part graph node must be an object");
  if (!j.contains("box")) throw FormatError("part graph node without 'box'");
  PartNode n;
  n.id = j.value("id", std::string());
  n.label = j.value("label", std::string());
  n.box = box_from_json(j["box"]);
  if (j.contains("children")) {
    if (!j["children"].is_array()) throw FormatError("'children' must be an array");
    for (const auto& c : j["children"]) n.children.push_back(part_graph_from_json(c));
  }
  return n;
}

inline PartNode read_part_graph(const std::string& path) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  return part_graph_from_json(j);
}

// ------------------------------------------------------------ extraction rules

inline std::vector<std::string> string_list(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  if (!j[key].is_array()) throw FormatError(std::string("'") + key + "' must be an array of strings");
  for (const auto& s : j[key]) {
    if (!s.is_string()) throw FormatError(std::string("'") + key + "' must be an array of strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

inline ExtractionRules rules_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("extraction rules must be an object");
  ExtractionRules r;
  r.flatten = string_list(j, "flatten");
  r.collapse = string_list(j, "collapse");
  r.label_priority = string_list(j, "priority");
  if (j.contains("move")) {
    if (!j["move"].is_array()) throw FormatError("'move' must be an array");
    for (const auto& m : j["move"]) {
      if (!m.is_object() || !m.contains("into") || !m["into"].is_string()) {
        throw FormatError("move rule needs 'labels' and 'into'");
      }
      r.moves.push_back({string_list(m, "labels"), m["into"].get<std::string>()});
    }
  }
  return r;
}

inline json rules_to_json(const ExtractionRules& r) {
  json moves = json::array();
  for (const auto& m : r.moves) moves.push_back({{"labels", m.labels}, {"into", m.into}});
  return json{{"flatten", r.flatten}, {"collapse", r.collapse}, {"move", moves}, {"priority", r.label_priority}};
}

// A rules file maps category names to rule sets.
inline ExtractionRules load_rules(const std::string& path, const std::string& category) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  if (!j.is_object() || !j.contains(category)) throw FormatError(path + ": no rules for category '" + category + "'");
  return rules_from_json(j[category]);
}

// ------------------------------------------------------------ reports

inline json to_json(const ValidationReport& r) {
  return json{{"fscore", r.fscore},       {"threshold", r.threshold}, {"components", r.components},
              {"leaf_count", r.leaf_count}, {"in_bounds", r.in_bounds}, {"executed", r.executed},
              {"pass", r.pass},           {"reasons", r.reasons}};
}

inline json to_json(const StabilityReport& r) {
  json poly = json::array();
  for (const auto& p : r.support_polygon) poly.push_back({p.x, p.y});
  return json{{"rooted", r.rooted},
              {"stable", r.stable},
              {"support_polygon", poly},
              {"com", {r.com.x, r.com.y}},
              {"margin", r.margin},
              {"required_margin", r.required_margin},
              {"components", r.components}};
}

inline json to_json(const ProgramStats& s) {
  return json{{"line_count", s.line_count},
              {"reflect_rate", s.reflect_rate},
              {"translate_rate", s.translate_rate},
              {"squeeze_rate", s.squeeze_rate},
              {"total_macro_rate", s.total_macro_rate},
              {"leaf_cuboid_count", s.leaf_cuboid_count},
              {"expanded_leaf_count", s.expanded_leaf_count}};
}

inline json to_json(const QualitySummary& q) {
  return json{{"count", q.count}, {"pct_rooted", q.pct_rooted}, {"pct_stable", q.pct_stable}};
}

inline json to_json(const FitReport& r) {
  json deltas = json::array();
  for (const auto& d : r.deltas) deltas.push_back({{"path", d.path}, {"name", d.name}, {"before", d.before}, {"after", d.after}});
  json trace = json::array();
  for (const auto& t : r.trace) trace.push_back({{"iteration", t.iteration}, {"chamfer", t.chamfer}, {"step_size", t.step_size}});
  return json{{"variant", r.variant},
              {"seed", r.seed},
              {"initial_chamfer", r.initial_chamfer},
              {"final_chamfer", r.final_chamfer},
              {"initial_fscore", r.initial_fscore},
              {"final_fscore", r.final_fscore},
              {"fscore_threshold", r.fscore_threshold},
              {"rooted_before", r.rooted_before},
              {"rooted_after", r.rooted_after},
              {"stable_before", r.stable_before},
              {"stable_after", r.stable_after},
              {"iterations_run", r.iterations_run},
              {"best_iteration", r.best_iteration},
              {"aborted", r.aborted},
              {"abort_reason", r.abort_reason},
              {"deltas", deltas},
              {"trace", trace}};
}

inline json to_json(const FitSummary& s) {
  return json{{"count", s.count},
              {"mean_fscore_before", s.mean_fscore_before},
              {"mean_fscore_after", s.mean_fscore_after},
              {"pct_rooted_before", s.pct_rooted_before},
              {"pct_rooted_after", s.pct_rooted_after},
              {"pct_stable_before", s.pct_stable_before},
              {"pct_stable_after", s.pct_stable_after},
              {"pct_fscore_improved", s.pct_fscore_improved},
              {"mean_chamfer_ratio", s.mean_chamfer_ratio}};
}

inline json to_json(const Violation& v) {
  return json{{"rule", std::string(rule_name(v.rule))},
              {"severity", std::string(severity_name(v.severity))},
              {"path", v.path},
              {"message", v.message}};
}

}  // namespace shapeasm
