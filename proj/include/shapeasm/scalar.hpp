#pragma once

// Scalar abstraction shared by every templated kernel. Geometry, the
// interpreter and the losses are written once against a scalar type S which
// is double (plain evaluation), long double (high-precision finite
// differences) or ad::Var (recorded for reverse-mode differentiation).

#include <algorithm>
#include <cmath>
#include <type_traits>

#include "shapeasm/autodiff.hpp"

namespace shapeasm {

inline double primal(double x) { return x; }
inline long double primal(long double x) { return x; }
using ad::primal;

template <class S>
inline constexpr bool is_var_v = std::is_same_v<S, ad::Var>;

// Converts between scalar types. Leaving the Var world drops the derivative.
template <class T, class S>
T scalar_cast(const S& x) {
  if constexpr (std::is_same_v<T, S>) {
    return x;
  } else if constexpr (is_var_v<S>) {
    return static_cast<T>(x.value());
  } else if constexpr (is_var_v<T>) {
    return T(static_cast<double>(x));
  } else {
    return static_cast<T>(x);
  }
}

namespace math {
using std::abs;
using std::atan2;
using std::cos;
using std::sin;
using std::sqrt;
using ad::abs;
using ad::atan2;
using ad::cos;
using ad::sin;
using ad::sqrt;
}  // namespace math

// Branch-selecting helpers with one-sided subgradients (ties pick `a`).
template <class S>
S smin(const S& a, const S& b) {
  return primal(a) <= primal(b) ? a : b;
}
template <class S>
S smax(const S& a, const S& b) {
  return primal(a) >= primal(b) ? a : b;
}
template <class S>
S sclamp(const S& x, const S& lo, const S& hi) {
  if (primal(x) < primal(lo)) return lo;
  if (primal(x) > primal(hi)) return hi;
  return x;
}

}  // namespace shapeasm
