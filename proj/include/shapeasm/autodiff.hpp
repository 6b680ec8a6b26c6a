#pragma once

// Reverse-mode automatic differentiation over an append-only tape.
//
// A Var is either a constant (no tape) or a reference to a node recorded on a
// Tape. Every arithmetic operation involving at least one recorded operand
// appends a node holding at most two parent indices and the local partials,
// so nodes are topologically ordered by construction and one backward sweep
// yields the derivative of an output with respect to every earlier node.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace shapeasm::ad {

class Tape {
 public:
  struct Node {
    int parent[2];
    double partial[2];
  };

  int new_root() {
    nodes_.push_back({{-1, -1}, {0.0, 0.0}});
    return static_cast<int>(nodes_.size()) - 1;
  }

  int record(int a, double da, int b = -1, double db = 0.0) {
    nodes_.push_back({{a, b}, {da, db}});
    return static_cast<int>(nodes_.size()) - 1;
  }

  int size() const { return static_cast<int>(nodes_.size()); }
  void clear() { nodes_.clear(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

  // Adjoints of every node up to and including `output`.
  std::vector<double> sweep(int output) const {
    if (output < 0 || output >= size()) {
      throw std::out_of_range("tape sweep: output index not on tape");
    }
    std::vector<double> adj(static_cast<std::size_t>(output) + 1, 0.0);
    adj[output] = 1.0;
    for (int i = output; i >= 0; --i) {
      const double g = adj[i];
      if (g == 0.0) continue;
      const Node& n = nodes_[i];
      if (n.parent[0] >= 0) adj[n.parent[0]] += g * n.partial[0];
      if (n.parent[1] >= 0) adj[n.parent[1]] += g * n.partial[1];
    }
    return adj;
  }

 private:
  std::vector<Node> nodes_;
};

class Var {
 public:
  Var() = default;
  Var(double v) : value_(v) {}  // NOLINT: constants convert implicitly
  Var(double v, Tape* tape, int index) : value_(v), tape_(tape), index_(index) {}

  double value() const { return value_; }
  Tape* tape() const { return tape_; }
  int index() const { return index_; }
  bool is_constant() const { return tape_ == nullptr; }

  Var& operator+=(const Var& o);
  Var& operator-=(const Var& o);
  Var& operator*=(const Var& o);
  Var& operator/=(const Var& o);

 private:
  double value_ = 0.0;
  Tape* tape_ = nullptr;
  int index_ = -1;
};

namespace detail {

inline Tape* common_tape(const Var& a, const Var& b) {
  if (a.tape() && b.tape() && a.tape() != b.tape()) {
    throw std::logic_error("operands recorded on different tapes");
  }
  return a.tape() ? a.tape() : b.tape();
}

inline Var unary(const Var& a, double v, double da) {
  if (a.is_constant()) return Var(v);
  return Var(v, a.tape(), a.tape()->record(a.index(), da));
}

inline Var binary(const Var& a, const Var& b, double v, double da, double db) {
  Tape* t = common_tape(a, b);
  if (!t) return Var(v);
  const int ia = a.is_constant() ? -1 : a.index();
  const int ib = b.is_constant() ? -1 : b.index();
  return Var(v, t, t->record(ia, da, ib, db));
}

}  // namespace detail

inline double primal(const Var& x) { return x.value(); }

inline Var operator+(const Var& a, const Var& b) {
  return detail::binary(a, b, a.value() + b.value(), 1.0, 1.0);
}
inline Var operator-(const Var& a, const Var& b) {
  return detail::binary(a, b, a.value() - b.value(), 1.0, -1.0);
}
inline Var operator*(const Var& a, const Var& b) {
  return detail::binary(a, b, a.value() * b.value(), b.value(), a.value());
}
inline Var operator/(const Var& a, const Var& b) {
  const double inv = 1.0 / b.value();
  return detail::binary(a, b, a.value() * inv, inv, -a.value() * inv * inv);
}
inline Var operator-(const Var& a) { return detail::unary(a, -a.value(), -1.0); }

inline Var& Var::operator+=(const Var& o) { return *this = *this + o; }
inline Var& Var::operator-=(const Var& o) { return *this = *this - o; }
inline Var& Var::operator*=(const Var& o) { return *this = *this * o; }
inline Var& Var::operator/=(const Var& o) { return *this = *this / o; }

// sqrt is not differentiable at 0; the zero subgradient is used there so that
// coincident points (zero distances) do not poison the tape with infinities.
inline Var sqrt(const Var& a) {
  const double r = std::sqrt(a.value());
  return detail::unary(a, r, r > 0.0 ? 0.5 / r : 0.0);
}
inline Var sin(const Var& a) {
  return detail::unary(a, std::sin(a.value()), std::cos(a.value()));
}
inline Var cos(const Var& a) {
  return detail::unary(a, std::cos(a.value()), -std::sin(a.value()));
}
inline Var atan2(const Var& y, const Var& x) {
  const double r2 = x.value() * x.value() + y.value() * y.value();
  const double dy = r2 > 0.0 ? x.value() / r2 : 0.0;
  const double dx = r2 > 0.0 ? -y.value() / r2 : 0.0;
  return detail::binary(y, x, std::atan2(y.value(), x.value()), dy, dx);
}
inline Var abs(const Var& a) {
  return detail::unary(a, std::abs(a.value()), a.value() < 0.0 ? -1.0 : 1.0);
}

// One-sided subgradients: the selected branch receives the derivative; ties
// select the first argument.
inline Var min(const Var& a, const Var& b) { return a.value() <= b.value() ? a : b; }
inline Var max(const Var& a, const Var& b) { return a.value() >= b.value() ? a : b; }
inline Var clamp(const Var& x, const Var& lo, const Var& hi) {
  if (x.value() < lo.value()) return lo;
  if (x.value() > hi.value()) return hi;
  return x;
}

// Each returned value is an independent differentiation root on `tape`.
inline std::vector<Var> lift(std::span<const double> params, Tape& tape) {
  std::vector<Var> out;
  out.reserve(params.size());
  for (double p : params) out.emplace_back(p, &tape, tape.new_root());
  return out;
}

// Exact reverse-mode derivatives of `output` with respect to `roots`. Roots
// that do not influence the output receive exactly 0.
inline std::vector<double> gradient(const Var& output, std::span<const Var> roots) {
  if (output.is_constant()) {
    throw std::invalid_argument("gradient: output is not recorded on a tape");
  }
  for (const Var& r : roots) {
    if (!r.is_constant() && r.tape() != output.tape()) {
      throw std::invalid_argument("gradient: root and output live on different tapes");
    }
  }
  const std::vector<double> adj = output.tape()->sweep(output.index());
  std::vector<double> g(roots.size(), 0.0);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    const int idx = roots[i].index();
    if (!roots[i].is_constant() && idx <= output.index()) g[i] = adj[idx];
  }
  return g;
}

}  // namespace shapeasm::ad
