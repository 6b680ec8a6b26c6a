#pragma once

// Canonical writer: one command per line, numerals with three decimals,
// sub-programs after the parent's commands, each indented four spaces.

#include <cstdio>
#include <string>
#include <variant>

#include "shapeasm/program.hpp"

namespace shapeasm {

inline std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  std::string s(buf);
  if (s == "-0.000") s = "0.000";
  return s;
}

namespace detail {

template <class S>
std::string num(const S& x) {
  return format_number(static_cast<double>(primal(x)));
}

template <class S>
std::string decl_line(const CuboidDecl<S>& d) {
  return d.name + " = Cuboid(" + num(d.l) + ", " + num(d.w) + ", " + num(d.h) + ", " +
         (d.aligned ? "True" : "False") + ")";
}

template <class S>
std::string attach_line(const Attach<S>& a) {
  std::string out = "attach(" + a.c1 + ", " + a.c2;
  for (int i = 0; i < 3; ++i) out += ", " + num(a.p1[i]);
  for (int i = 0; i < 3; ++i) out += ", " + num(a.p2[i]);
  return out + ")";
}

template <class S>
std::string command_line(const AttachCmd<S>& cmd) {
  if (const auto* a = std::get_if<0>(&cmd)) return attach_line(*a);
  const auto& s = std::get<1>(cmd);
  return "squeeze(" + s.c1 + ", " + s.c2 + ", " + s.c3 + ", " + std::string(face_name(s.face)) + ", " + num(s.u) +
         ", " + num(s.v) + ")";
}

template <class S>
std::string command_line(const SymmetryCmd<S>& cmd) {
  if (const auto* r = std::get_if<0>(&cmd)) return "reflect(" + r->c + ", " + std::string(axis_name(r->axis)) + ")";
  const auto& t = std::get<1>(cmd);
  return "translate(" + t.c + ", " + std::string(axis_name(t.axis)) + ", " + std::to_string(t.m) + ", " + num(t.d) +
         ")";
}

template <class S>
void print_block(const BasicProgram<S>& p, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  out += pad + decl_line(p.bbox) + "\n";
  for (const auto& c : p.cuboids) out += pad + decl_line(c) + "\n";
  for (const auto& cmd : p.attaches) out += pad + command_line(cmd) + "\n";
  for (const auto& cmd : p.symmetries) out += pad + command_line(cmd) + "\n";
  for (const auto& child : p.children) {
    out += pad + "Program " + child.owner + ":\n";
    print_block(child, indent + 4, out);
  }
}

}  // namespace detail

template <class S>
std::string print_program(const BasicProgram<S>& p) {
  std::string out;
  detail::print_block(p, 0, out);
  return out;
}

}  // namespace shapeasm
