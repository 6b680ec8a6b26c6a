#include <gtest/gtest.h>

#include <sstream>

#include "support/support.hpp"

using namespace shapeasm;

TEST(PointCloud, StratifiedFaceAllocationOnUnitCube) {
  const auto plan = plan_surface_samples({make_cuboid({1, 1, 1})}, 600, 0);
  std::array<int, 6> per{};
  for (const auto& s : plan) ++per[static_cast<int>(s.face)];
  for (int f = 0; f < 6; ++f) EXPECT_EQ(per[f], 100);
}

TEST(PointCloud, SamplesLieOnTheSurface) {
  const Cuboid c = make_cuboid({0.5, 2, 1}, {1, 2, 3}, axis_angle(normalized(Vec3d{1, 1, 0}), 0.4));
  const PointCloud pc = sample_surface(c, 1000, 7);
  ASSERT_EQ(pc.size(), 1000u);
  for (const auto& p : pc.points) {
    const Vec3d l = world_to_local(c, p);
    double on_face = 1e9;
    for (int i = 0; i < 3; ++i) {
      EXPECT_GE(l[i], -1e-9);
      EXPECT_LE(l[i], 1 + 1e-9);
      on_face = std::min({on_face, std::abs(l[i]), std::abs(l[i] - 1)});
    }
    EXPECT_LT(on_face, 1e-9);
  }
}

TEST(PointCloud, SamplingIsDeterministicPerSeed) {
  const std::vector<Cuboid> cs{make_cuboid({1, 1, 1}), make_cuboid({0.2, 0.3, 0.4}, {2, 0, 0})};
  const auto a = sample_surface(cs, 300, 5), b = sample_surface(cs, 300, 5), c = sample_surface(cs, 300, 6);
  ASSERT_EQ(a.size(), b.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.points[i].x, b.points[i].x);
    differs = differs || a.points[i].x != c.points[i].x;
  }
  EXPECT_TRUE(differs);
}

TEST(PointCloud, RejectsTooFewSamples) { EXPECT_THROW(sample_surface(make_cuboid({1, 1, 1}), 5), std::invalid_argument); }

TEST(PointCloud, VolumeGrid) {
  const PointCloud k2 = sample_volume_grid(make_cuboid({1, 1, 1}), 2);
  ASSERT_EQ(k2.size(), 8u);
  for (const auto& p : k2.points) {
    EXPECT_NEAR(std::abs(p.x), 0.25, 1e-12);
    EXPECT_NEAR(std::abs(p.y), 0.25, 1e-12);
    EXPECT_NEAR(std::abs(p.z), 0.25, 1e-12);
  }
  const Cuboid c = make_cuboid({1, 2, 3}, {0, 1, 0}, axis_angle(Vec3d{0, 0, 1}, 0.5));
  const PointCloud k20 = sample_volume_grid(c, 20);
  EXPECT_EQ(k20.size(), 8000u);
  for (const auto& p : k20.points) EXPECT_TRUE(point_in_cuboid(p, c, 0.0));
  EXPECT_EQ(sample_volume_grid(c, 50).size(), 125000u);
}

TEST(PointCloud, ChamferExamples) {
  PointCloud a, b;
  a.points = {{0, 0, 0}};
  b.points = {{1, 0, 0}};
  EXPECT_DOUBLE_EQ(chamfer_distance(a, b), 1.0);
  const PointCloud s = sample_surface(make_cuboid({1, 1, 1}), 200);
  EXPECT_DOUBLE_EQ(chamfer_distance(s, s), 0.0);
  EXPECT_THROW(chamfer_distance(PointCloud{}, s), std::invalid_argument);
}

TEST(PointCloud, ChamferAgainstBruteForce) {
  const PointCloud a = sample_surface(make_cuboid({1, 1, 1}), 300, 1);
  const PointCloud b = sample_surface(make_cuboid({0.8, 1.2, 1}, {0.1, 0, 0.2}), 250, 2);
  auto mean_nn = [](const PointCloud& p, const PointCloud& q) {
    double s = 0;
    for (const auto& x : p.points) {
      double best = 1e300;
      for (const auto& y : q.points) best = std::min(best, norm(x - y));
      s += best;
    }
    return s / p.size();
  };
  EXPECT_NEAR(chamfer_distance(a, b), 0.5 * (mean_nn(a, b) + mean_nn(b, a)), 1e-12);
}

TEST(PointCloud, FScoreExamples) {
  const PointCloud s = sample_surface(make_cuboid({1, 1, 1}), 200);
  EXPECT_DOUBLE_EQ(f_score(s, s, 0.01), 100.0);
  PointCloud far = s;
  for (auto& p : far.points) p.x += 10;
  EXPECT_DOUBLE_EQ(f_score(s, far, 0.5), 0.0);
  // Precision 1, recall 0.5.
  PointCloud a, b;
  a.points = {{0, 0, 0}, {0, 0, 0}};
  b.points = {{0, 0, 0}, {5, 0, 0}};
  EXPECT_NEAR(f_score(a, b, 0.1), 66.6667, 1e-4);
  EXPECT_THROW(f_score(a, PointCloud{}, 0.1), std::invalid_argument);
}

TEST(PointCloud, XyzRoundTrip) {
  const PointCloud s = sample_surface(make_cuboid({1, 2, 3}), 50, 3);
  std::stringstream ss;
  write_xyz(ss, s);
  const PointCloud back = read_xyz(ss);
  ASSERT_EQ(back.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(norm(back.points[i] - s.points[i]), 0.0, 1e-6);
}

TEST(PointCloud, NearestGridMatchesBruteForce) {
  std::mt19937_64 rng(3);
  std::vector<Vec3d> pts;
  for (int i = 0; i < 500; ++i) pts.push_back({unit_uniform(rng) * 3, unit_uniform(rng), unit_uniform(rng) * 0.1});
  const PointGrid grid(pts);
  for (int q = 0; q < 200; ++q) {
    const Vec3d x{unit_uniform(rng) * 4 - 0.5, unit_uniform(rng) * 2 - 0.5, unit_uniform(rng)};
    double best = 1e300;
    for (const auto& p : pts) best = std::min(best, squared_norm(x - p));
    EXPECT_NEAR(grid.nearest(x).dist2, best, 1e-12);
  }
}
