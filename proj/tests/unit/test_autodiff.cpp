#include <gtest/gtest.h>

#include "support/support.hpp"

using namespace shapeasm;

TEST(Autodiff, SquareGradient) {
  ad::Tape tape;
  const std::vector<double> x0{2.0};
  auto x = ad::lift(x0, tape);
  const ad::Var f = x[0] * x[0];
  EXPECT_DOUBLE_EQ(ad::gradient(f, x)[0], 4.0);
}

TEST(Autodiff, ProductGradient) {
  ad::Tape tape;
  const std::vector<double> x0{2.0, 3.0};
  auto x = ad::lift(x0, tape);
  const auto g = ad::gradient(x[0] * x[1], x);
  EXPECT_DOUBLE_EQ(g[0], 3.0);
  EXPECT_DOUBLE_EQ(g[1], 2.0);
}

TEST(Autodiff, PolynomialGradient) {
  ad::Tape tape;
  const std::vector<double> x0{1.0};
  auto x = ad::lift(x0, tape);
  EXPECT_DOUBLE_EQ(ad::gradient(x[0] * x[0] + 3.0 * x[0], x)[0], 5.0);
}

TEST(Autodiff, ElementaryFunctions) {
  ad::Tape tape;
  const std::vector<double> x0{0.7, -0.4};
  auto x = ad::lift(x0, tape);
  const ad::Var f = ad::sin(x[0]) * ad::cos(x[1]) + ad::sqrt(x[0]) + ad::atan2(x[1], x[0]) - ad::abs(x[1]) / x[0];
  const auto g = ad::gradient(f, x);
  const double a = 0.7, b = -0.4;
  const double r2 = a * a + b * b;
  EXPECT_NEAR(g[0], std::cos(a) * std::cos(b) + 0.5 / std::sqrt(a) - b / r2 + std::abs(b) / (a * a), 1e-12);
  EXPECT_NEAR(g[1], -std::sin(a) * std::sin(b) + a / r2 + 1.0 / a, 1e-12);
}

TEST(Autodiff, OneSidedMinMaxClamp) {
  ad::Tape tape;
  const std::vector<double> x0{0.5, 0.5, 2.0};
  auto x = ad::lift(x0, tape);
  // Ties select the first argument.
  auto g = ad::gradient(ad::min(x[0], x[1]), x);
  EXPECT_EQ(g[0], 1.0);
  EXPECT_EQ(g[1], 0.0);
  g = ad::gradient(ad::max(x[1], x[0]), x);
  EXPECT_EQ(g[1], 1.0);
  EXPECT_EQ(g[0], 0.0);
  // Clamped from above: derivative flows to the bound.
  g = ad::gradient(ad::clamp(x[2], ad::Var(0.0), x[0]), x);
  EXPECT_EQ(g[2], 0.0);
  EXPECT_EQ(g[0], 1.0);
  g = ad::gradient(ad::clamp(x[0], ad::Var(0.0), x[2]), x);
  EXPECT_EQ(g[0], 1.0);
}

TEST(Autodiff, UnusedRootsGetZero) {
  ad::Tape tape;
  const std::vector<double> x0{1.0, 2.0};
  auto x = ad::lift(x0, tape);
  const auto g = ad::gradient(x[0] * 3.0, x);
  EXPECT_EQ(g[1], 0.0);
}

TEST(Autodiff, ConstantOutputIsAnError) {
  ad::Tape tape;
  const std::vector<double> x0{1.0};
  auto x = ad::lift(x0, tape);
  EXPECT_THROW(ad::gradient(ad::Var(3.0), x), std::invalid_argument);
}

TEST(Autodiff, FiniteDiffCheckOnSumOfSquares) {
  const auto r = finite_diff_check(
      [](const auto& v) {
        using S = typename std::decay_t<decltype(v)>::value_type;
        S s(0.0);
        for (const auto& x : v) s += x * x;
        return s;
      },
      {0.3, -1.2, 2.5}, 1e-5);
  EXPECT_LT(r.max_rel_error, 1e-9);
  EXPECT_EQ(r.excluded_count(), 0);
}

TEST(Autodiff, FiniteDiffCheckRejectsNonFinite) {
  EXPECT_THROW(finite_diff_check(
                   [](const auto& v) {
                     using S = typename std::decay_t<decltype(v)>::value_type;
                     return v[0] / S(0.0);
                   },
                   {1.0}, 1e-5),
               std::domain_error);
}

TEST(Autodiff, RelativeErrorFloor) {
  EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(relative_error(0.0, 0.0), 0.0);
  EXPECT_NEAR(relative_error(1e-12, 0.0), 1e-4, 1e-18);
}

TEST(Autodiff, AttachChainGradients) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 10; ++i) {
    const Program p = testsupport::random_program(rng);
    const PointCloud target = sample_surface(testsupport::leaves_of(p), 400, 1);
    const ProgramGradCheck r = check_program_gradients(p, target, 1e-5, 300, 0);
    EXPECT_LT(r.max_rel_error(), 1e-4) << print_program(p);
  }
}
