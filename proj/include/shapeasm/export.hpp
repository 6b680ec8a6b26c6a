#pragma once

// Mesh and trace export: OBJ with 8 vertices and 12 triangles per cuboid, and
// a JSON-lines dump of the execution trace.

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "shapeasm/geometry.hpp"
#include "shapeasm/interpreter.hpp"

namespace shapeasm {

// Triangles of the unit box using the corner numbering of corners() (bit i of
// the index is the axis-i coordinate), wound counter-clockwise seen from outside.
inline const std::array<std::array<int, 3>, 12>& box_triangles() {
  static const std::array<std::array<int, 3>, 12> tris{{
      {1, 3, 7}, {1, 7, 5},  // +x
      {0, 4, 6}, {0, 6, 2},  // -x
      {2, 6, 7}, {2, 7, 3},  // +y
      {0, 1, 5}, {0, 5, 4},  // -y
      {4, 5, 7}, {4, 7, 6},  // +z
      {0, 2, 3}, {0, 3, 1},  // -z
  }};
  return tris;
}

inline void write_obj(std::ostream& out, const std::vector<Cuboid>& cuboids,
                      const std::vector<std::string>& names = {}) {
  char buf[128];
  int base = 1;
  for (std::size_t i = 0; i < cuboids.size(); ++i) {
    out << "o " << (i < names.size() ? names[i] : "cuboid" + std::to_string(i)) << "\n";
    for (const Vec3d& p : corners(cuboids[i])) {
      std::snprintf(buf, sizeof buf, "v %.6f %.6f %.6f\n", p.x, p.y, p.z);
      out << buf;
    }
    for (const auto& t : box_triangles()) {
      out << "f " << base + t[0] << " " << base + t[1] << " " << base + t[2] << "\n";
    }
    base += 8;
  }
}

inline void write_obj(std::ostream& out, const ExecutedShape<double>& shape) {
  std::vector<Cuboid> cs;
  std::vector<std::string> names;
  for (const auto& l : shape.leaves) {
    cs.push_back(l.geom);
    names.push_back(l.path);
  }
  write_obj(out, cs, names);
}

inline void write_obj_file(const std::string& path, const ExecutedShape<double>& shape) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  write_obj(f, shape);
}

namespace detail {

inline std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out;
}

inline std::string json_vec(const Vec3d& v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "[%.6f,%.6f,%.6f]", v.x, v.y, v.z);
  return buf;
}

}  // namespace detail

// One JSON object per executed command, listing the state of every live
// cuboid in the frame of the program being run.
inline void write_trace_jsonl(std::ostream& out, const std::vector<TraceStep>& trace) {
  for (const TraceStep& s : trace) {
    out << "{\"step\":" << s.step << ",\"path\":\"" << detail::json_escape(s.path) << "\",\"command\":\""
        << detail::json_escape(s.command) << "\",\"cuboids\":[";
    for (std::size_t i = 0; i < s.cuboids.size(); ++i) {
      const auto& [name, c] = s.cuboids[i];
      const auto q = rotation_to_quat(c.pose.rotation);
      char buf[96];
      std::snprintf(buf, sizeof buf, "[%.6f,%.6f,%.6f,%.6f]", q[0], q[1], q[2], q[3]);
      out << (i ? "," : "") << "{\"name\":\"" << detail::json_escape(name) << "\",\"dims\":" << detail::json_vec(c.dims)
          << ",\"center\":" << detail::json_vec(c.pose.center) << ",\"quat\":" << buf << "}";
    }
    out << "]}\n";
  }
}

}  // namespace shapeasm
