#pragma once

// Token streams, token-level edit distance, line statistics and structural
// signatures over programs.

#include <algorithm>
#include <cstdio>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "shapeasm/printer.hpp"

namespace shapeasm {

inline const std::string kEol = "<eol>";

namespace detail {

inline std::string num2(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

inline void tokens_of(const Program& p, std::vector<std::string>& out) {
  auto decl = [&](const CuboidDecl<double>& d) {
    out.insert(out.end(), {d.name, "Cuboid", num2(d.l), num2(d.w), num2(d.h), d.aligned ? "True" : "False", kEol});
  };
  decl(p.bbox);
  for (const auto& c : p.cuboids) decl(c);
  for (const auto& cmd : p.attaches) {
    if (const auto* a = std::get_if<0>(&cmd)) {
      out.insert(out.end(), {"attach", a->c1, a->c2});
      for (int i = 0; i < 3; ++i) out.push_back(num2(a->p1[i]));
      for (int i = 0; i < 3; ++i) out.push_back(num2(a->p2[i]));
    } else {
      const auto& s = std::get<1>(cmd);
      out.insert(out.end(), {"squeeze", s.c1, s.c2, s.c3, std::string(face_name(s.face)), num2(s.u), num2(s.v)});
    }
    out.push_back(kEol);
  }
  for (const auto& cmd : p.symmetries) {
    if (const auto* r = std::get_if<0>(&cmd)) {
      out.insert(out.end(), {"reflect", r->c, std::string(axis_name(r->axis))});
    } else {
      const auto& t = std::get<1>(cmd);
      out.insert(out.end(), {"translate", t.c, std::string(axis_name(t.axis)), std::to_string(t.m), num2(t.d)});
    }
    out.push_back(kEol);
  }
  for (const auto& child : p.children) {
    out.insert(out.end(), {"Program", child.owner, kEol});
    tokens_of(child, out);
    out.insert(out.end(), {"EndProgram", kEol});
  }
}

}  // namespace detail

// Canonical token stream: per line the command name and operands, numerals
// rounded to two decimals, then an end-of-line token.
inline std::vector<std::string> program_tokens(const Program& p) {
  std::vector<std::string> out;
  detail::tokens_of(p, out);
  return out;
}

template <class T>
int levenshtein(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline int token_edit_distance(const Program& a, const Program& b) {
  // Intern tokens so the inner loop compares integers.
  std::unordered_map<std::string, int> ids;
  auto intern = [&](const std::vector<std::string>& toks) {
    std::vector<int> out;
    out.reserve(toks.size());
    for (const auto& t : toks) out.push_back(ids.emplace(t, static_cast<int>(ids.size())).first->second);
    return out;
  };
  return levenshtein(intern(program_tokens(a)), intern(program_tokens(b)));
}

struct ProgramStats {
  int line_count = 0;
  int reflect_lines = 0;
  int translate_lines = 0;
  int squeeze_lines = 0;
  double reflect_rate = 0;
  double translate_rate = 0;
  double squeeze_rate = 0;
  double total_macro_rate = 0;
  int leaf_cuboid_count = 0;      // Cuboid declarations without sub-programs
  int expanded_leaf_count = -1;   // leaves after hierarchy and symmetry expansion; -1 if not computed
};

namespace detail {

inline void accumulate_stats(const Program& p, ProgramStats& s) {
  s.line_count += p.line_count();
  for (const auto& cmd : p.attaches) s.squeeze_lines += cmd.index() == 1 ? 1 : 0;
  for (const auto& cmd : p.symmetries) {
    if (cmd.index() == 0) ++s.reflect_lines;
    else ++s.translate_lines;
  }
  for (const auto& c : p.cuboids) s.leaf_cuboid_count += p.child_for(c.name) ? 0 : 1;
  for (const auto& child : p.children) accumulate_stats(child, s);
}

}  // namespace detail

// Rates are macro lines over all command lines of the whole hierarchy
// (sub-program header lines are not commands).
inline ProgramStats program_stats(const Program& p) {
  ProgramStats s;
  detail::accumulate_stats(p, s);
  if (s.line_count > 0) {
    const double n = s.line_count;
    s.reflect_rate = s.reflect_lines / n;
    s.translate_rate = s.translate_lines / n;
    s.squeeze_rate = s.squeeze_lines / n;
    s.total_macro_rate = (s.reflect_lines + s.translate_lines + s.squeeze_lines) / n;
  }
  return s;
}

// Canonical text with every continuous operand replaced by '#'.
inline std::string structural_signature(const Program& p) {
  Program q = p;
  for_each_param(q, [](double& v, const ParamInfo&) { v = 0.0; });
  std::string text = print_program(q);
  std::string out;
  out.reserve(text.size());
  const std::string zero = format_number(0.0);
  for (std::size_t i = 0; i < text.size();) {
    if (text.compare(i, zero.size(), zero) == 0) {
      out += '#';
      i += zero.size();
    } else {
      out += text[i++];
    }
  }
  return out;
}

}  // namespace shapeasm
