#pragma once

// Surface and volume sampling of cuboids, exact nearest-neighbour queries,
// Chamfer distance and F-score.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "shapeasm/geometry.hpp"

namespace shapeasm {

struct PointCloud {
  std::vector<Vec3d> points;
  std::vector<int> source;  // optional: index of the cuboid each point came from

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

// Upper bound on worker threads; SHAPEASM_THREADS overrides the hardware count.
inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SHAPEASM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(v));
  }
  return n;
}

// Runs fn(i) for i in [0, n) across worker threads. Each index is written by
// exactly one call, so results do not depend on the thread count.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), n / 512 + 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

// Uniform double in [0,1) from the top 53 bits; identical on every platform.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Splits `n` into integer shares proportional to `weights` (largest remainder,
// ties to the lower index). Zero total weight spreads evenly.
inline std::vector<int> allocate_counts(const std::vector<double>& weights, int n) {
  const std::size_t k = weights.size();
  std::vector<int> out(k, 0);
  if (k == 0 || n <= 0) return out;
  double total = 0;
  for (double w : weights) total += std::max(w, 0.0);
  std::vector<double> share(k);
  for (std::size_t i = 0; i < k; ++i) {
    share[i] = total > 0 ? std::max(weights[i], 0.0) / total * n : static_cast<double>(n) / k;
  }
  int used = 0;
  std::vector<std::pair<double, std::size_t>> rem;
  for (std::size_t i = 0; i < k; ++i) {
    out[i] = static_cast<int>(std::floor(share[i] + 1e-9));
    used += out[i];
    rem.push_back({share[i] - out[i], i});
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t j = 0; used < n; ++j, ++used) ++out[rem[j % k].second];
  return out;
}

// A surface sample expressed in cuboid-local terms, so the same plan can be
// replayed through differentiable geometry.
struct SurfaceSample {
  int cuboid = 0;
  Face face = Face::Right;
  double u = 0.5, v = 0.5;
};

inline std::array<double, 6> face_areas(const Cuboid& c) {
  std::array<double, 6> a{};
  for (int f = 0; f < 6; ++f) {
    const auto uv = face_uv_axes(face_axis(static_cast<Face>(f)));
    a[f] = c.dims[uv[0]] * c.dims[uv[1]];
  }
  return a;
}

// Stratified plan: the n samples are split over cuboids by surface area, then
// over each cuboid's faces by face area; in-face positions are uniform. Each
// (cuboid, face) draws from its own stream, so two plans with slightly
// different counts share their common prefix of positions.
inline std::vector<SurfaceSample> plan_surface_samples(const std::vector<Cuboid>& cs, int n,
                                                       std::uint64_t seed) {
  std::vector<double> area(cs.size());
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const auto fa = face_areas(cs[i]);
    area[i] = 0;
    for (double a : fa) area[i] += a;
  }
  const std::vector<int> per = allocate_counts(area, n);
  std::vector<SurfaceSample> plan;
  plan.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const auto fa = face_areas(cs[i]);
    const std::vector<int> pf = allocate_counts(std::vector<double>(fa.begin(), fa.end()), per[i]);
    for (int f = 0; f < 6; ++f) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(f)};
      std::mt19937_64 rng(seq);
      for (int j = 0; j < pf[f]; ++j) {
        const double u = unit_uniform(rng);
        const double v = unit_uniform(rng);
        plan.push_back({static_cast<int>(i), static_cast<Face>(f), u, v});
      }
    }
  }
  return plan;
}

template <class S>
std::vector<Vec3<S>> apply_samples(const std::vector<CuboidGeom<S>>& cs, const std::vector<SurfaceSample>& plan) {
  std::vector<Vec3<S>> out;
  out.reserve(plan.size());
  for (const SurfaceSample& s : plan) {
    out.push_back(local_to_world_affine(cs[s.cuboid], face_point(s.face, S(s.u), S(s.v))));
  }
  return out;
}

inline PointCloud sample_surface(const std::vector<Cuboid>& cs, int n, std::uint64_t seed = 0) {
  const auto plan = plan_surface_samples(cs, n, seed);
  PointCloud pc;
  pc.points = apply_samples(cs, plan);
  for (const auto& s : plan) pc.source.push_back(s.cuboid);
  return pc;
}

inline PointCloud sample_surface(const Cuboid& c, int n, std::uint64_t seed = 0) {
  if (n < 6) throw std::invalid_argument("sample_surface: need at least 6 points");
  return sample_surface(std::vector<Cuboid>{c}, n, seed);
}

// Deterministic surface lattice: each face gets cell-centred points with
// spacing at most `spacing`.
inline PointCloud sample_surface_lattice(const std::vector<Cuboid>& cs, double spacing) {
  if (!(spacing > 0)) throw std::invalid_argument("sample_surface_lattice: spacing must be positive");
  PointCloud pc;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    for (int f = 0; f < 6; ++f) {
      const Face face = static_cast<Face>(f);
      const auto uv = face_uv_axes(face_axis(face));
      const int nu = std::max(1, static_cast<int>(std::ceil(cs[i].dims[uv[0]] / spacing)));
      const int nv = std::max(1, static_cast<int>(std::ceil(cs[i].dims[uv[1]] / spacing)));
      for (int a = 0; a < nu; ++a) {
        for (int b = 0; b < nv; ++b) {
          pc.points.push_back(local_to_world_affine(cs[i], face_point(face, (a + 0.5) / nu, (b + 0.5) / nv)));
          pc.source.push_back(static_cast<int>(i));
        }
      }
    }
  }
  return pc;
}

inline PointCloud sample_volume_grid(const Cuboid& c, int k) {
  if (k < 2) throw std::invalid_argument("sample_volume_grid: k must be >= 2");
  PointCloud pc;
  pc.points.reserve(static_cast<std::size_t>(k) * k * k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      for (int l = 0; l < k; ++l)
        pc.points.push_back(local_to_world_affine(c, Vec3d{(i + 0.5) / k, (j + 0.5) / k, (l + 0.5) / k}));
  return pc;
}

// Uniform hash-free grid over a fixed point set; nearest() is exact.
class PointGrid {
 public:
  explicit PointGrid(const std::vector<Vec3d>& pts) : pts_(pts) {
    if (pts.empty()) throw std::invalid_argument("PointGrid: empty point set");
    lo_ = hi_ = pts[0];
    for (const auto& p : pts) {
      for (int i = 0; i < 3; ++i) {
        lo_[i] = std::min(lo_[i], p[i]);
        hi_[i] = std::max(hi_[i], p[i]);
      }
    }
    double vol = 1;
    int live = 0;
    for (int i = 0; i < 3; ++i) {
      const double e = hi_[i] - lo_[i];
      if (e > 1e-12) { vol *= e; ++live; }
    }
    // About two points per cell.
    cell_ = live == 0 ? 1.0 : std::pow(vol * 2.0 / static_cast<double>(pts.size()), 1.0 / live);
    if (!(cell_ > 1e-12) || !std::isfinite(cell_)) cell_ = 1.0;
    for (int i = 0; i < 3; ++i) {
      n_[i] = std::clamp(static_cast<int>((hi_[i] - lo_[i]) / cell_) + 1, 1, 256);
    }
    start_.assign(static_cast<std::size_t>(n_[0]) * n_[1] * n_[2] + 1, 0);
    std::vector<int> cell_of(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      cell_of[i] = flat(cell_coords(pts[i]));
      ++start_[cell_of[i] + 1];
    }
    for (std::size_t c = 1; c < start_.size(); ++c) start_[c] += start_[c - 1];
    order_.resize(pts.size());
    std::vector<int> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < pts.size(); ++i) order_[fill[cell_of[i]]++] = static_cast<int>(i);
  }

  struct Hit {
    int index;
    double dist2;
  };

  // Nearest point; equal distances resolve to the lowest index.
  Hit nearest(const Vec3d& q) const {
    const auto c = cell_coords(q);
    Hit best{-1, std::numeric_limits<double>::infinity()};
    const int max_r = std::max({n_[0], n_[1], n_[2]});
    for (int r = 0; r <= max_r; ++r) {
      scan_ring(c, r, q, best);
      if (best.index < 0) continue;
      const double bound = unscanned_distance(c, r, q);
      if (!std::isfinite(bound) || best.dist2 < bound * bound) break;
    }
    return best;
  }

  const std::vector<Vec3d>& points() const { return pts_; }

 private:
  std::array<int, 3> cell_coords(const Vec3d& p) const {
    std::array<int, 3> c{};
    for (int i = 0; i < 3; ++i) {
      c[i] = std::clamp(static_cast<int>(std::floor((p[i] - lo_[i]) / cell_)), 0, n_[i] - 1);
    }
    return c;
  }
  // Lower bound on the distance from q to any cell outside the cube of
  // cells within Chebyshev radius r of c; infinite once the cube covers the grid.
  double unscanned_distance(const std::array<int, 3>& c, int r, const Vec3d& q) const {
    double bound = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
      if (c[i] - r > 0) bound = std::min(bound, std::max(0.0, q[i] - (lo_[i] + (c[i] - r) * cell_)));
      if (c[i] + r + 1 < n_[i]) bound = std::min(bound, std::max(0.0, lo_[i] + (c[i] + r + 1) * cell_ - q[i]));
    }
    return bound;
  }
  int flat(const std::array<int, 3>& c) const { return (c[0] * n_[1] + c[1]) * n_[2] + c[2]; }

  void scan_cell(int x, int y, int z, const Vec3d& q, Hit& best) const {
    const int f = flat({x, y, z});
    for (int k = start_[f]; k < start_[f + 1]; ++k) {
      const int idx = order_[k];
      const double d2 = squared_norm(pts_[idx] - q);
      if (d2 < best.dist2 || (d2 == best.dist2 && idx < best.index)) best = {idx, d2};
    }
  }

  void scan_ring(const std::array<int, 3>& c, int r, const Vec3d& q, Hit& best) const {
    for (int x = c[0] - r; x <= c[0] + r; ++x) {
      if (x < 0 || x >= n_[0]) continue;
      const bool xe = std::abs(x - c[0]) == r;
      for (int y = c[1] - r; y <= c[1] + r; ++y) {
        if (y < 0 || y >= n_[1]) continue;
        const bool ye = std::abs(y - c[1]) == r;
        if (xe || ye) {
          for (int z = c[2] - r; z <= c[2] + r; ++z) {
            if (z >= 0 && z < n_[2]) scan_cell(x, y, z, q, best);
          }
        } else {
          if (c[2] - r >= 0) scan_cell(x, y, c[2] - r, q, best);
          if (r > 0 && c[2] + r < n_[2]) scan_cell(x, y, c[2] + r, q, best);
        }
      }
    }
  }

  std::vector<Vec3d> pts_;
  Vec3d lo_, hi_;
  double cell_ = 1;
  std::array<int, 3> n_{1, 1, 1};
  std::vector<int> start_;
  std::vector<int> order_;
};

// Index of the nearest point of `grid` for every query point.
inline std::vector<int> nearest_indices(const std::vector<Vec3d>& queries, const PointGrid& grid) {
  std::vector<int> out(queries.size());
  parallel_for(queries.size(), [&](std::size_t i) { out[i] = grid.nearest(queries[i]).index; });
  return out;
}

inline std::vector<double> nearest_distances(const std::vector<Vec3d>& queries, const PointGrid& grid) {
  std::vector<double> out(queries.size());
  parallel_for(queries.size(), [&](std::size_t i) { out[i] = std::sqrt(grid.nearest(queries[i]).dist2); });
  return out;
}

// Nearest-neighbour correspondences used by one Chamfer evaluation.
struct Correspondence {
  std::vector<int> a_to_b;
  std::vector<int> b_to_a;
};

template <class S>
std::vector<Vec3d> primal_points(const std::vector<Vec3<S>>& pts) {
  std::vector<Vec3d> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(primal_vec(p));
  return out;
}

// Chamfer distance with the given nearest-neighbour correspondences.
template <class S>
S chamfer_fixed(const std::vector<Vec3<S>>& a, const std::vector<Vec3d>& b, const Correspondence& corr) {
  if (corr.a_to_b.size() != a.size() || corr.b_to_a.size() != b.size()) {
    throw std::invalid_argument("chamfer: correspondence size mismatch");
  }
  S sum_a(0.0), sum_b(0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum_a += norm(a[i] - vec_cast<S>(b[corr.a_to_b[i]]));
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    sum_b += norm(vec_cast<S>(b[j]) - a[corr.b_to_a[j]]);
  }
  const S na(static_cast<double>(a.size())), nb(static_cast<double>(b.size()));
  return (sum_a / na + sum_b / nb) / S(2.0);
}

// Chamfer distance between a (possibly differentiable) cloud and a fixed
// target. Correspondences are found on primal values and then frozen.
template <class S>
S chamfer(const std::vector<Vec3<S>>& a, const std::vector<Vec3d>& b, const PointGrid* b_grid = nullptr,
          Correspondence* used = nullptr) {
  if (a.empty() || b.empty()) throw std::invalid_argument("chamfer: empty point cloud");
  const std::vector<Vec3d> ap = primal_points(a);
  std::optional<PointGrid> own_b;
  if (!b_grid) own_b.emplace(b);
  const PointGrid& gb = b_grid ? *b_grid : *own_b;
  const PointGrid ga(ap);
  Correspondence corr{nearest_indices(ap, gb), nearest_indices(b, ga)};
  S out = chamfer_fixed(a, b, corr);
  if (used) *used = std::move(corr);
  return out;
}

inline double chamfer_distance(const PointCloud& a, const PointCloud& b) {
  return chamfer(a.points, b.points);
}

// Precision/recall harmonic mean scaled to [0, 100].
inline double f_score(const PointCloud& a, const PointCloud& b, double threshold) {
  if (a.empty() || b.empty()) throw std::invalid_argument("f_score: empty point cloud");
  if (!(threshold > 0)) throw std::invalid_argument("f_score: threshold must be positive");
  const PointGrid ga(a.points), gb(b.points);
  const auto da = nearest_distances(a.points, gb);
  const auto db = nearest_distances(b.points, ga);
  const auto within = [threshold](const std::vector<double>& d) {
    std::size_t k = 0;
    for (double x : d) k += x <= threshold ? 1 : 0;
    return static_cast<double>(k) / static_cast<double>(d.size());
  };
  const double precision = within(da), recall = within(db);
  if (precision + recall <= 0) return 0.0;
  return 100.0 * 2.0 * precision * recall / (precision + recall);
}

inline std::pair<Vec3d, Vec3d> bounds(const std::vector<Vec3d>& pts) {
  if (pts.empty()) throw std::invalid_argument("bounds: empty point set");
  Vec3d lo = pts[0], hi = pts[0];
  for (const auto& p : pts)
    for (int i = 0; i < 3; ++i) {
      lo[i] = std::min(lo[i], p[i]);
      hi[i] = std::max(hi[i], p[i]);
    }
  return {lo, hi};
}

// Default F-score threshold: 2% of the cloud's axis-aligned bounding diagonal.
inline double default_fscore_threshold(const PointCloud& target) {
  const auto [lo, hi] = bounds(target.points);
  return 0.02 * norm(hi - lo);
}

inline PointCloud read_xyz(std::istream& in) {
  PointCloud pc;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    Vec3d p;
    if (!(ss >> p.x >> p.y >> p.z)) {
      throw std::runtime_error("point cloud line " + std::to_string(lineno) + ": expected `x y z`");
    }
    pc.points.push_back(p);
  }
  return pc;
}

inline PointCloud read_xyz(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_xyz(in);
}

inline void write_xyz(std::ostream& out, const PointCloud& pc) {
  char buf[96];
  for (const auto& p : pc.points) {
    std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g\n", p.x, p.y, p.z);
    out << buf;
  }
}

}  // namespace shapeasm
