#pragma once

// Vectors, rigid poses and cuboid coordinate frames.
//
// Axis convention: a cuboid's dims are (x, y, z) extents, where x carries the
// program's `l`, y (up) carries `h` and z carries `w`. Local attachment
// coordinates live in [0,1]^3 with (0.5, 0.5, 0.5) at the centroid. Faces are
// right/left = +x/-x, top/bot = +y/-y, front/back = +z/-z.

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "shapeasm/scalar.hpp"

namespace shapeasm {

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class S>
struct Vec3 {
  S x{}, y{}, z{};

  Vec3() = default;
  Vec3(S x_, S y_, S z_) : x(std::move(x_)), y(std::move(y_)), z(std::move(z_)) {}

  S& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  const S& operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(const S& s) { x *= s; y *= s; z *= s; return *this; }
};

using Vec3d = Vec3<double>;

template <class S> Vec3<S> operator+(Vec3<S> a, const Vec3<S>& b) { return a += b; }
template <class S> Vec3<S> operator-(Vec3<S> a, const Vec3<S>& b) { return a -= b; }
template <class S> Vec3<S> operator-(const Vec3<S>& a) { return {-a.x, -a.y, -a.z}; }
template <class S> Vec3<S> operator*(Vec3<S> a, const S& s) { return a *= s; }
template <class S> Vec3<S> operator*(const S& s, Vec3<S> a) { return a *= s; }
template <class S> Vec3<S> operator/(const Vec3<S>& a, const S& s) { return {a.x / s, a.y / s, a.z / s}; }

template <class S> Vec3<S> hadamard(const Vec3<S>& a, const Vec3<S>& b) {
  return {a.x * b.x, a.y * b.y, a.z * b.z};
}
template <class S> S dot(const Vec3<S>& a, const Vec3<S>& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
template <class S> Vec3<S> cross(const Vec3<S>& a, const Vec3<S>& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
template <class S> S squared_norm(const Vec3<S>& a) { return dot(a, a); }
template <class S> S norm(const Vec3<S>& a) { return math::sqrt(dot(a, a)); }
template <class S> Vec3<S> normalized(const Vec3<S>& a) { return a / norm(a); }

template <class T, class S>
Vec3<T> vec_cast(const Vec3<S>& v) {
  return {scalar_cast<T>(v.x), scalar_cast<T>(v.y), scalar_cast<T>(v.z)};
}
template <class S>
Vec3d primal_vec(const Vec3<S>& v) {
  return {static_cast<double>(primal(v.x)), static_cast<double>(primal(v.y)),
          static_cast<double>(primal(v.z))};
}

// Column-major 3x3 matrix; col[i] is the image of the i-th basis vector.
template <class S>
struct Mat3 {
  std::array<Vec3<S>, 3> col{Vec3<S>{S(1), S(0), S(0)}, Vec3<S>{S(0), S(1), S(0)},
                             Vec3<S>{S(0), S(0), S(1)}};

  static Mat3 identity() { return Mat3{}; }
  static Mat3 from_columns(const Vec3<S>& a, const Vec3<S>& b, const Vec3<S>& c) {
    Mat3 m;
    m.col = {a, b, c};
    return m;
  }

  S operator()(int r, int c) const { return col[c][r]; }

  Vec3<S> operator*(const Vec3<S>& v) const { return col[0] * v.x + col[1] * v.y + col[2] * v.z; }
  Mat3 operator*(const Mat3& o) const {
    return from_columns((*this) * o.col[0], (*this) * o.col[1], (*this) * o.col[2]);
  }
  Vec3<S> transpose_mul(const Vec3<S>& v) const {
    return {dot(col[0], v), dot(col[1], v), dot(col[2], v)};
  }
  Mat3 transposed() const {
    Mat3 t;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) t.col[c][r] = col[r][c];
    return t;
  }
};

using Mat3d = Mat3<double>;

template <class T, class S>
Mat3<T> mat_cast(const Mat3<S>& m) {
  return Mat3<T>::from_columns(vec_cast<T>(m.col[0]), vec_cast<T>(m.col[1]), vec_cast<T>(m.col[2]));
}

template <class S>
S determinant(const Mat3<S>& m) {
  return dot(m.col[0], cross(m.col[1], m.col[2]));
}

inline bool is_rotation(const Mat3d& m, double tol = 1e-6) {
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double expect = i == j ? 1.0 : 0.0;
      if (std::abs(dot(m.col[i], m.col[j]) - expect) > tol) return false;
    }
  }
  return std::abs(determinant(m) - 1.0) <= tol;
}

// Rotation by `angle` radians about the unit vector `axis`.
template <class S>
Mat3<S> axis_angle(const Vec3<S>& axis, const S& angle) {
  const S c = math::cos(angle);
  const S s = math::sin(angle);
  const S t = S(1) - c;
  const S& x = axis.x;
  const S& y = axis.y;
  const S& z = axis.z;
  return Mat3<S>::from_columns({t * x * x + c, t * x * y + s * z, t * x * z - s * y},
                               {t * x * y - s * z, t * y * y + c, t * y * z + s * x},
                               {t * x * z + s * y, t * y * z - s * x, t * z * z + c});
}

// Smallest rotation taking unit vector `a` onto unit vector `b`. For exactly
// opposite vectors the half-turn about a perpendicular axis is returned and
// `antiparallel` is set.
template <class S>
Mat3<S> rotation_between(const Vec3<S>& a, const Vec3<S>& b, bool* antiparallel = nullptr) {
  const S c = dot(a, b);
  if (primal(c) > -1.0 + 1e-12) {
    if (antiparallel) *antiparallel = false;
    const Vec3<S> v = cross(a, b);
    const S k = S(1) / (S(1) + c);
    // R = I + [v]x + [v]x^2 / (1 + c)
    Mat3<S> r;
    r.col[0] = {S(1) - k * (v.y * v.y + v.z * v.z), v.z + k * v.x * v.y, -v.y + k * v.x * v.z};
    r.col[1] = {-v.z + k * v.x * v.y, S(1) - k * (v.x * v.x + v.z * v.z), v.x + k * v.y * v.z};
    r.col[2] = {v.y + k * v.x * v.z, -v.x + k * v.y * v.z, S(1) - k * (v.x * v.x + v.y * v.y)};
    return r;
  }
  if (antiparallel) *antiparallel = true;
  const Vec3d ap = primal_vec(a);
  int least = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(ap[i]) < std::abs(ap[least])) least = i;
  Vec3<S> e{S(0), S(0), S(0)};
  e[least] = S(1);
  const Vec3<S> u = normalized(cross(a, e));
  Mat3<S> r;
  for (int c2 = 0; c2 < 3; ++c2)
    for (int r2 = 0; r2 < 3; ++r2) r.col[c2][r2] = S(2) * u[r2] * u[c2] - (r2 == c2 ? S(1) : S(0));
  return r;
}

// Unit quaternion (w, x, y, z) to rotation matrix; the input is normalised.
inline Mat3d quat_to_rotation(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (n < 1e-12) throw GeometryError("quaternion has zero norm");
  w /= n; x /= n; y /= n; z /= n;
  return Mat3d::from_columns({1 - 2 * (y * y + z * z), 2 * (x * y + w * z), 2 * (x * z - w * y)},
                             {2 * (x * y - w * z), 1 - 2 * (x * x + z * z), 2 * (y * z + w * x)},
                             {2 * (x * z + w * y), 2 * (y * z - w * x), 1 - 2 * (x * x + y * y)});
}

inline std::array<double, 4> rotation_to_quat(const Mat3d& m) {
  const double tr = m(0, 0) + m(1, 1) + m(2, 2);
  double w, x, y, z;
  if (tr > 0) {
    const double s = std::sqrt(tr + 1.0) * 2;
    w = 0.25 * s;
    x = (m(2, 1) - m(1, 2)) / s;
    y = (m(0, 2) - m(2, 0)) / s;
    z = (m(1, 0) - m(0, 1)) / s;
  } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
    const double s = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2)) * 2;
    w = (m(2, 1) - m(1, 2)) / s;
    x = 0.25 * s;
    y = (m(0, 1) + m(1, 0)) / s;
    z = (m(0, 2) + m(2, 0)) / s;
  } else if (m(1, 1) > m(2, 2)) {
    const double s = std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2)) * 2;
    w = (m(0, 2) - m(2, 0)) / s;
    x = (m(0, 1) + m(1, 0)) / s;
    y = 0.25 * s;
    z = (m(1, 2) + m(2, 1)) / s;
  } else {
    const double s = std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1)) * 2;
    w = (m(1, 0) - m(0, 1)) / s;
    x = (m(0, 2) + m(2, 0)) / s;
    y = (m(1, 2) + m(2, 1)) / s;
    z = 0.25 * s;
  }
  if (w < 0) { w = -w; x = -x; y = -y; z = -z; }
  return {w, x, y, z};
}

template <class S>
struct RigidPose {
  Mat3<S> rotation = Mat3<S>::identity();
  Vec3<S> center{S(0), S(0), S(0)};
};

template <class S>
struct CuboidGeom {
  Vec3<S> dims{S(1), S(1), S(1)};
  RigidPose<S> pose;
  bool aligned = false;
};

using Cuboid = CuboidGeom<double>;

template <class T, class S>
CuboidGeom<T> geom_cast(const CuboidGeom<S>& c) {
  CuboidGeom<T> out;
  out.dims = vec_cast<T>(c.dims);
  out.pose.rotation = mat_cast<T>(c.pose.rotation);
  out.pose.center = vec_cast<T>(c.pose.center);
  out.aligned = c.aligned;
  return out;
}

inline Cuboid make_cuboid(const Vec3d& dims, const Vec3d& center = {0, 0, 0},
                          const Mat3d& rotation = Mat3d::identity(), bool aligned = false) {
  Cuboid c;
  c.dims = dims;
  c.pose.center = center;
  c.pose.rotation = rotation;
  c.aligned = aligned;
  return c;
}

// Affine frame map without the [0,1] range contract.
template <class S>
Vec3<S> local_to_world_affine(const CuboidGeom<S>& c, const Vec3<S>& uvw) {
  const S half(0.5);
  const Vec3<S> offset{(uvw.x - half) * c.dims.x, (uvw.y - half) * c.dims.y, (uvw.z - half) * c.dims.z};
  return c.pose.center + c.pose.rotation * offset;
}

template <class S>
Vec3<S> local_to_world(const CuboidGeom<S>& c, const Vec3<S>& uvw) {
  constexpr double kTol = 1e-9;
  for (int i = 0; i < 3; ++i) {
    const auto u = primal(uvw[i]);
    if (!(u >= -kTol && u <= 1.0 + kTol)) {
      throw GeometryError("local_to_world: coordinate " + std::to_string(static_cast<double>(u)) +
                          " outside [0,1]");
    }
  }
  return local_to_world_affine(c, uvw);
}

template <class S>
Vec3<S> world_to_local(const CuboidGeom<S>& c, const Vec3<S>& p) {
  for (int i = 0; i < 3; ++i) {
    if (!(std::abs(static_cast<double>(primal(c.dims[i]))) >= 1e-12)) {
      throw GeometryError("world_to_local: degenerate cuboid dimension");
    }
  }
  const Vec3<S> rel = c.pose.rotation.transpose_mul(p - c.pose.center);
  const S half(0.5);
  return {rel.x / c.dims.x + half, rel.y / c.dims.y + half, rel.z / c.dims.z + half};
}

inline bool point_in_cuboid(const Vec3d& p, const Cuboid& c, double slack) {
  if (slack < 0) throw std::invalid_argument("point_in_cuboid: negative slack");
  const Vec3d l = world_to_local(c, p);
  constexpr double kEps = 1e-9;
  for (int i = 0; i < 3; ++i) {
    if (l[i] < -slack - kEps || l[i] > 1.0 + slack + kEps) return false;
  }
  return true;
}

// Euclidean distance from a point to the solid cuboid (0 inside).
inline double point_cuboid_distance(const Vec3d& p, const Cuboid& c) {
  const Vec3d rel = c.pose.rotation.transpose_mul(p - c.pose.center);
  double d2 = 0;
  for (int i = 0; i < 3; ++i) {
    const double e = std::max(std::abs(rel[i]) - 0.5 * c.dims[i], 0.0);
    d2 += e * e;
  }
  return std::sqrt(d2);
}

// Corner k has local coordinate bit i of k along axis i.
template <class S>
std::array<Vec3<S>, 8> corners(const CuboidGeom<S>& c) {
  std::array<Vec3<S>, 8> out;
  for (int k = 0; k < 8; ++k) {
    out[k] = local_to_world_affine(
        c, Vec3<S>{S((k & 1) ? 1.0 : 0.0), S((k & 2) ? 1.0 : 0.0), S((k & 4) ? 1.0 : 0.0)});
  }
  return out;
}

inline double diagonal(const Cuboid& c) { return norm(c.dims); }

enum class Face { Right, Left, Top, Bot, Front, Back };
enum class Axis { X, Y, Z };

inline int face_axis(Face f) { return static_cast<int>(f) / 2; }
// 1 for the +axis face (local coordinate 1), 0 for the -axis face.
inline int face_side(Face f) { return static_cast<int>(f) % 2 == 0 ? 1 : 0; }
inline Face make_face(int axis, int side) { return static_cast<Face>(axis * 2 + (side == 1 ? 0 : 1)); }
inline Face opposite(Face f) { return make_face(face_axis(f), 1 - face_side(f)); }
inline int axis_index(Axis a) { return static_cast<int>(a); }

inline std::string_view face_name(Face f) {
  static constexpr std::string_view kNames[] = {"right", "left", "top", "bot", "front", "back"};
  return kNames[static_cast<int>(f)];
}
inline std::string_view axis_name(Axis a) {
  static constexpr std::string_view kNames[] = {"X", "Y", "Z"};
  return kNames[static_cast<int>(a)];
}

// In-face (u, v) coordinate axes for a face on `axis`.
inline std::array<int, 2> face_uv_axes(int axis) {
  switch (axis) {
    case 0: return {1, 2};
    case 1: return {0, 2};
    default: return {0, 1};
  }
}

// Local point on face f at in-face coordinates (u, v).
template <class S>
Vec3<S> face_point(Face f, const S& u, const S& v) {
  const int a = face_axis(f);
  const auto uv = face_uv_axes(a);
  Vec3<S> p{S(0.5), S(0.5), S(0.5)};
  p[a] = S(static_cast<double>(face_side(f)));
  p[uv[0]] = u;
  p[uv[1]] = v;
  return p;
}


namespace detail {

inline double segment_distance(const Vec3d& p1, const Vec3d& q1, const Vec3d& p2, const Vec3d& q2) {
  const Vec3d d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const double a = dot(d1, d1), e = dot(d2, d2), f = dot(d2, r);
  double s = 0, t = 0;
  constexpr double kEps = 1e-18;
  if (a <= kEps && e <= kEps) return norm(r);
  if (a <= kEps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = dot(d1, r);
    if (e <= kEps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = dot(d1, d2);
      const double denom = a * e - b * b;
      s = denom > kEps ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0) {
        t = 0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1) {
        t = 1;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return norm((p1 + d1 * s) - (p2 + d2 * t));
}

// Separating-axis overlap test for solid boxes.
inline bool cuboids_overlap(const Cuboid& a, const Cuboid& b) {
  const Vec3d t = b.pose.center - a.pose.center;
  std::array<Vec3d, 15> axes;
  int n = 0;
  for (int i = 0; i < 3; ++i) axes[n++] = a.pose.rotation.col[i];
  for (int i = 0; i < 3; ++i) axes[n++] = b.pose.rotation.col[i];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) axes[n++] = cross(a.pose.rotation.col[i], b.pose.rotation.col[j]);
  for (const Vec3d& ax : axes) {
    const double len = norm(ax);
    if (len < 1e-9) continue;
    const Vec3d u = ax / len;
    double ra = 0, rb = 0;
    for (int i = 0; i < 3; ++i) {
      ra += 0.5 * a.dims[i] * std::abs(dot(a.pose.rotation.col[i], u));
      rb += 0.5 * b.dims[i] * std::abs(dot(b.pose.rotation.col[i], u));
    }
    if (std::abs(dot(t, u)) > ra + rb) return false;
  }
  return true;
}

inline std::array<std::array<int, 2>, 12> box_edges() {
  std::array<std::array<int, 2>, 12> e{};
  int n = 0;
  for (int k = 0; k < 8; ++k)
    for (int bit = 0; bit < 3; ++bit)
      if (!(k & (1 << bit))) e[n++] = {k, k | (1 << bit)};
  return e;
}

}  // namespace detail

inline double cuboid_distance(const Cuboid& a, const Cuboid& b) {
  if (detail::cuboids_overlap(a, b)) return 0.0;
  const auto ca = corners(a);
  const auto cb = corners(b);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : ca) best = std::min(best, point_cuboid_distance(p, b));
  for (const auto& p : cb) best = std::min(best, point_cuboid_distance(p, a));
  const auto edges = detail::box_edges();
  for (const auto& ea : edges)
    for (const auto& eb : edges)
      best = std::min(best, detail::segment_distance(ca[ea[0]], ca[ea[1]], cb[eb[0]], cb[eb[1]]));
  return best;
}

}  // namespace shapeasm
