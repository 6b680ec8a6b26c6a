#pragma once

// Line-oriented recursive-descent parser for ShapeAssembly text.
//
//   bbox = Cuboid(l, w, h, True)
//   cube0 = Cuboid(l, w, h, True|False)
//   attach(cube0, bbox, x1, y1, z1, x2, y2, z2)
//   squeeze(cube1, cube0, bbox, top, u, v)
//   reflect(cube0, X)
//   translate(cube1, Y, m, d)
//   Program cube0:
//       <child program, indented 4 more spaces>

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "shapeasm/program.hpp"

namespace shapeasm {

enum class ParseErrorKind { Lexical, Syntax, Arity, BlockOrder, Undeclared, Duplicate };

inline std::string_view parse_error_kind_name(ParseErrorKind k) {
  switch (k) {
    case ParseErrorKind::Lexical: return "lexical";
    case ParseErrorKind::Syntax: return "syntax";
    case ParseErrorKind::Arity: return "arity";
    case ParseErrorKind::BlockOrder: return "block-order";
    case ParseErrorKind::Undeclared: return "undeclared";
    case ParseErrorKind::Duplicate: return "duplicate";
  }
  return "?";
}

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, int line, int column, const std::string& msg)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " +
                           std::string(parse_error_kind_name(kind)) + " error: " + msg),
        kind_(kind), line_(line), column_(column) {}

  ParseErrorKind kind() const { return kind_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  ParseErrorKind kind_;
  int line_, column_;
};

namespace detail {

enum class Tok { Ident, Number, LParen, RParen, Comma, Equals, Colon };

struct Token {
  Tok kind;
  std::string text;
  int column;
  double number = 0;
};

struct SourceLine {
  int lineno;
  int indent;
  std::vector<Token> tokens;
};

inline std::vector<Token> lex_line(std::string_view s, int lineno, int start) {
  std::vector<Token> out;
  std::size_t i = static_cast<std::size_t>(start);
  while (i < s.size()) {
    const char ch = s[i];
    const int col = static_cast<int>(i) + 1;
    if (ch == ' ' || ch == '\r') { ++i; continue; }
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      out.push_back({Tok::Ident, std::string(s.substr(i, j - i)), col});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' || ch == '+') {
      std::size_t j = i;
      if (s[j] == '-' || s[j] == '+') ++j;
      bool digits = false;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) { ++j; digits = true; }
      if (j < s.size() && s[j] == '.') {
        ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) { ++j; digits = true; }
      }
      if (digits && j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s.size() && (s[k] == '-' || s[k] == '+')) ++k;
        if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
          while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
          j = k;
        }
      }
      if (!digits) throw ParseError(ParseErrorKind::Lexical, lineno, col, "malformed number");
      const std::string text(s.substr(i, j - i));
      Token t{Tok::Number, text, col};
      t.number = std::strtod(text.c_str(), nullptr);
      out.push_back(t);
      i = j;
      continue;
    }
    Tok kind;
    switch (ch) {
      case '(': kind = Tok::LParen; break;
      case ')': kind = Tok::RParen; break;
      case ',': kind = Tok::Comma; break;
      case '=': kind = Tok::Equals; break;
      case ':': kind = Tok::Colon; break;
      default:
        throw ParseError(ParseErrorKind::Lexical, lineno, col, std::string("unexpected character '") + ch + "'");
    }
    out.push_back({kind, std::string(1, ch), col});
    ++i;
  }
  return out;
}

inline std::vector<SourceLine> split_lines(std::string_view text) {
  std::vector<SourceLine> lines;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view raw = text.substr(pos, end - pos);
    ++lineno;
    int indent = 0;
    while (indent < static_cast<int>(raw.size()) && raw[indent] == ' ') ++indent;
    if (indent < static_cast<int>(raw.size()) && raw[indent] == '\t') {
      throw ParseError(ParseErrorKind::Lexical, lineno, indent + 1, "tab in indentation");
    }
    auto toks = lex_line(raw, lineno, indent);
    if (!toks.empty()) lines.push_back({lineno, indent, std::move(toks)});
    if (end == text.size()) break;
    pos = end + 1;
  }
  return lines;
}

// Cursor over one line's tokens for a call of the form name(arg, arg, ...).
class ArgReader {
 public:
  ArgReader(const SourceLine& line, std::size_t start, std::string callee)
      : line_(line), pos_(start), callee_(std::move(callee)) {}

  // Checks the argument count up front so a missing or extra operand is
  // reported as an arity error rather than a type mismatch.
  void open(int expected) {
    expect(Tok::LParen, "'('");
    int args = 0;
    bool pending = false;
    for (std::size_t i = pos_; i < line_.tokens.size(); ++i) {
      const Tok k = line_.tokens[i].kind;
      if (k == Tok::RParen) {
        if (pending) ++args;
        if (args != expected) {
          throw ParseError(ParseErrorKind::Arity, line_.lineno, line_.tokens[i].column,
                           callee_ + " takes " + std::to_string(expected) + " arguments, got " +
                               std::to_string(args));
        }
        return;
      }
      if (k == Tok::Comma) {
        ++args;
        pending = false;
      } else {
        pending = true;
      }
    }
  }

  void close() {
    if (pos_ < line_.tokens.size() && line_.tokens[pos_].kind == Tok::Comma) {
      throw ParseError(ParseErrorKind::Arity, line_.lineno, line_.tokens[pos_].column,
                       "too many arguments to " + callee_);
    }
    expect(Tok::RParen, "')'");
    if (pos_ != line_.tokens.size()) {
      throw ParseError(ParseErrorKind::Syntax, line_.lineno, line_.tokens[pos_].column,
                       "unexpected trailing input after " + callee_ + "(...)");
    }
  }

  const Token& arg(Tok kind, const char* what) {
    if (count_ > 0) {
      if (pos_ < line_.tokens.size() && line_.tokens[pos_].kind == Tok::RParen) {
        throw ParseError(ParseErrorKind::Arity, line_.lineno, line_.tokens[pos_].column,
                         "too few arguments to " + callee_);
      }
      expect(Tok::Comma, "','");
    } else if (pos_ < line_.tokens.size() && line_.tokens[pos_].kind == Tok::RParen) {
      throw ParseError(ParseErrorKind::Arity, line_.lineno, line_.tokens[pos_].column,
                       "too few arguments to " + callee_);
    }
    ++count_;
    if (pos_ >= line_.tokens.size() || line_.tokens[pos_].kind != kind) {
      throw ParseError(ParseErrorKind::Syntax, line_.lineno, column(), std::string("expected ") + what);
    }
    return line_.tokens[pos_++];
  }

  int column() const {
    if (pos_ < line_.tokens.size()) return line_.tokens[pos_].column;
    return line_.tokens.empty() ? 1 : line_.tokens.back().column + 1;
  }

 private:
  void expect(Tok kind, const char* what) {
    if (pos_ >= line_.tokens.size() || line_.tokens[pos_].kind != kind) {
      throw ParseError(ParseErrorKind::Syntax, line_.lineno, column(), std::string("expected ") + what);
    }
    ++pos_;
  }

  const SourceLine& line_;
  std::size_t pos_;
  std::string callee_;
  int count_ = 0;
};

inline std::optional<Face> face_from_name(std::string_view s) {
  for (int f = 0; f < 6; ++f)
    if (face_name(static_cast<Face>(f)) == s) return static_cast<Face>(f);
  return std::nullopt;
}

inline std::optional<Axis> axis_from_name(std::string_view s) {
  for (int a = 0; a < 3; ++a)
    if (axis_name(static_cast<Axis>(a)) == s) return static_cast<Axis>(a);
  return std::nullopt;
}

class Parser {
 public:
  explicit Parser(std::vector<SourceLine> lines) : lines_(std::move(lines)) {}

  Program parse() {
    if (lines_.empty()) throw ParseError(ParseErrorKind::BlockOrder, 1, 1, "empty program: missing bbox");
    if (lines_[0].indent != 0) {
      throw ParseError(ParseErrorKind::Syntax, lines_[0].lineno, 1, "top-level program must not be indented");
    }
    Program p = block(0, "");
    if (pos_ < lines_.size()) {
      throw ParseError(ParseErrorKind::Syntax, lines_[pos_].lineno, lines_[pos_].indent + 1, "unexpected indentation");
    }
    return p;
  }

 private:
  enum Phase { kStart, kCuboids, kAttaches, kSymmetries, kChildren };

  Program block(int indent, const std::string& owner) {
    Program p;
    p.owner = owner;
    Phase phase = kStart;
    std::set<std::string> child_owners;
    while (pos_ < lines_.size() && lines_[pos_].indent >= indent) {
      const SourceLine& ln = lines_[pos_];
      if (ln.indent != indent) {
        throw ParseError(ParseErrorKind::Syntax, ln.lineno, ln.indent + 1, "unexpected indentation");
      }
      const Token& head = ln.tokens[0];
      if (head.kind != Tok::Ident) {
        throw ParseError(ParseErrorKind::Syntax, ln.lineno, head.column, "expected a command");
      }
      if (ln.tokens.size() >= 2 && ln.tokens[1].kind == Tok::Equals) {
        auto decl = declaration(ln);
        if (decl.name == kBBox) {
          if (phase != kStart) order_error(ln, "bbox must be declared first and only once");
          p.bbox = decl;
          phase = kCuboids;
        } else {
          if (phase == kStart) order_error(ln, "program must begin with the bbox declaration");
          if (phase != kCuboids) order_error(ln, "Cuboid declaration after attach/symmetry commands");
          if (p.find_decl(decl.name)) {
            throw ParseError(ParseErrorKind::Duplicate, ln.lineno, head.column, "duplicate cuboid '" + decl.name + "'");
          }
          p.cuboids.push_back(decl);
        }
        ++pos_;
      } else if (head.text == "attach" || head.text == "squeeze") {
        if (phase == kStart) order_error(ln, "program must begin with the bbox declaration");
        if (phase > kAttaches) order_error(ln, head.text + " after symmetry commands");
        phase = kAttaches;
        if (head.text == "attach") p.attaches.push_back(attach(ln, p));
        else p.attaches.push_back(squeeze(ln, p));
        ++pos_;
      } else if (head.text == "reflect" || head.text == "translate") {
        if (phase == kStart) order_error(ln, "program must begin with the bbox declaration");
        if (phase > kSymmetries) order_error(ln, head.text + " after sub-programs");
        phase = kSymmetries;
        if (head.text == "reflect") p.symmetries.push_back(reflect(ln, p));
        else p.symmetries.push_back(translate(ln, p));
        ++pos_;
      } else if (head.text == "Program") {
        if (phase == kStart) order_error(ln, "program must begin with the bbox declaration");
        phase = kChildren;
        if (ln.tokens.size() != 3 || ln.tokens[1].kind != Tok::Ident || ln.tokens[2].kind != Tok::Colon) {
          throw ParseError(ParseErrorKind::Syntax, ln.lineno, head.column, "expected `Program <cuboid>:`");
        }
        const std::string& name = ln.tokens[1].text;
        if (!p.find_decl(name)) {
          throw ParseError(ParseErrorKind::Undeclared, ln.lineno, ln.tokens[1].column,
                           "sub-program for undeclared cuboid '" + name + "'");
        }
        if (!child_owners.insert(name).second) {
          throw ParseError(ParseErrorKind::Duplicate, ln.lineno, ln.tokens[1].column,
                           "second sub-program for '" + name + "'");
        }
        ++pos_;
        if (pos_ >= lines_.size() || lines_[pos_].indent <= indent) {
          throw ParseError(ParseErrorKind::Syntax, ln.lineno, head.column, "sub-program has no body");
        }
        p.children.push_back(block(lines_[pos_].indent, name));
      } else {
        throw ParseError(ParseErrorKind::Syntax, ln.lineno, head.column, "unknown command '" + head.text + "'");
      }
    }
    if (phase == kStart) {
      const int lineno = pos_ < lines_.size() ? lines_[pos_].lineno : (lines_.empty() ? 1 : lines_.back().lineno);
      order_error_at(lineno, "program must begin with the bbox declaration");
    }
    return p;
  }

  [[noreturn]] void order_error(const SourceLine& ln, const std::string& msg) {
    throw ParseError(ParseErrorKind::BlockOrder, ln.lineno, ln.tokens[0].column, msg);
  }
  [[noreturn]] void order_error_at(int lineno, const std::string& msg) {
    throw ParseError(ParseErrorKind::BlockOrder, lineno, 1, msg);
  }

  static const std::string& ref(const SourceLine& ln, const Token& t, const Program& p) {
    if (!p.find_decl(t.text)) {
      throw ParseError(ParseErrorKind::Undeclared, ln.lineno, t.column, "undeclared cuboid '" + t.text + "'");
    }
    return t.text;
  }

  static CuboidDecl<double> declaration(const SourceLine& ln) {
    if (ln.tokens.size() < 3 || ln.tokens[2].kind != Tok::Ident || ln.tokens[2].text != "Cuboid") {
      throw ParseError(ParseErrorKind::Syntax, ln.lineno, ln.tokens[1].column + 1, "expected `Cuboid(...)`");
    }
    CuboidDecl<double> d;
    d.name = ln.tokens[0].text;
    ArgReader r(ln, 3, "Cuboid");
    r.open(4);
    d.l = r.arg(Tok::Number, "length").number;
    d.w = r.arg(Tok::Number, "width").number;
    d.h = r.arg(Tok::Number, "height").number;
    const Token& a = r.arg(Tok::Ident, "True or False");
    if (a.text == "True") d.aligned = true;
    else if (a.text == "False") d.aligned = false;
    else throw ParseError(ParseErrorKind::Syntax, ln.lineno, a.column, "expected True or False");
    r.close();
    return d;
  }

  static Attach<double> attach(const SourceLine& ln, const Program& p) {
    Attach<double> a;
    ArgReader r(ln, 1, "attach");
    r.open(8);
    a.c1 = ref(ln, r.arg(Tok::Ident, "cuboid name"), p);
    a.c2 = ref(ln, r.arg(Tok::Ident, "cuboid name"), p);
    for (int i = 0; i < 3; ++i) a.p1[i] = r.arg(Tok::Number, "coordinate").number;
    for (int i = 0; i < 3; ++i) a.p2[i] = r.arg(Tok::Number, "coordinate").number;
    r.close();
    return a;
  }

  static Squeeze<double> squeeze(const SourceLine& ln, const Program& p) {
    Squeeze<double> s;
    ArgReader r(ln, 1, "squeeze");
    r.open(6);
    s.c1 = ref(ln, r.arg(Tok::Ident, "cuboid name"), p);
    s.c2 = ref(ln, r.arg(Tok::Ident, "cuboid name"), p);
    s.c3 = ref(ln, r.arg(Tok::Ident, "cuboid name"), p);
    const Token& f = r.arg(Tok::Ident, "face name");
    const auto face = face_from_name(f.text);
    if (!face) throw ParseError(ParseErrorKind::Syntax, ln.lineno, f.column, "unknown face '" + f.text + "'");
    s.face = *face;
    s.u = r.arg(Tok::Number, "face coordinate").number;
    s.v = r.arg(Tok::Number, "face coordinate").number;
    r.close();
    return s;
  }

  static Axis axis_arg(const SourceLine& ln, ArgReader& r) {
    const Token& t = r.arg(Tok::Ident, "axis");
    const auto axis = axis_from_name(t.text);
    if (!axis) throw ParseError(ParseErrorKind::Syntax, ln.lineno, t.column, "unknown axis '" + t.text + "'");
    return *axis;
  }

  static Reflect<double> reflect(const SourceLine& ln, const Program& p) {
    Reflect<double> out;
    ArgReader r(ln, 1, "reflect");
    r.open(2);
    out.c = ref(ln, r.arg(Tok::Ident, "cuboid name"), p);
    out.axis = axis_arg(ln, r);
    r.close();
    return out;
  }

  static Translate<double> translate(const SourceLine& ln, const Program& p) {
    Translate<double> out;
    ArgReader r(ln, 1, "translate");
    r.open(4);
    out.c = ref(ln, r.arg(Tok::Ident, "cuboid name"), p);
    out.axis = axis_arg(ln, r);
    const Token& m = r.arg(Tok::Number, "member count");
    if (m.text.find_first_of(".eE") != std::string::npos || m.number < 1) {
      throw ParseError(ParseErrorKind::Syntax, ln.lineno, m.column, "member count must be a positive integer");
    }
    out.m = static_cast<int>(m.number);
    out.d = r.arg(Tok::Number, "distance").number;
    r.close();
    return out;
  }

  std::vector<SourceLine> lines_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Program parse_program(std::string_view text) {
  return detail::Parser(detail::split_lines(text)).parse();
}

}  // namespace shapeasm
