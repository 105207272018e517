#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "qsf/quadrature.hpp"

namespace quad = qsf::quad;
constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(Quadrature, FiniteInterval) {
  const auto r = quad::integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi);
  EXPECT_NEAR(r.value, 2.0, 1e-13);
  EXPECT_LE(r.error, 1e-10);
}

TEST(Quadrature, ReversedBoundsNegate) {
  const auto r = quad::integrate([](double x) { return x * x; }, 1.0, 0.0);
  EXPECT_NEAR(r.value, -1.0 / 3.0, 1e-14);
}

TEST(Quadrature, HalfLineAndFullLine) {
  EXPECT_NEAR(quad::integrate([](double x) { return std::exp(-x); }, 0.0, kInf).value, 1.0, 1e-13);
  EXPECT_NEAR(quad::integrate([](double x) { return std::exp(x); }, -kInf, 0.0).value, 1.0, 1e-13);
  EXPECT_NEAR(quad::integrate([](double x) { return 1.0 / (1.0 + x * x); }, -kInf, kInf).value,
              std::numbers::pi, 1e-12);
}

TEST(Quadrature, HeavyTail) {
  // |x|^{-4/3} decay, the tail of the q = 2.5 kernel.
  auto f = [](double x) { return std::pow(1.0 + x * x / 3.0, -2.0 / 3.0 - 0.0) / (1.0 + x * x / 3.0); };
  const auto r = quad::integrate(f, 0.0, kInf);
  EXPECT_TRUE(std::isfinite(r.value));
  EXPECT_GT(r.value, 0.0);
}

TEST(Quadrature, RadialGaussian) {
  for (int dim : {1, 2, 3, 4}) {
    const auto r = quad::integrate_radial([](double rr) { return std::exp(-0.5 * rr * rr); }, dim, kInf);
    EXPECT_NEAR(r.value, std::pow(2.0 * std::numbers::pi, dim / 2.0), 1e-10) << dim;
  }
}

TEST(Quadrature, UnitSphereArea) {
  EXPECT_NEAR(quad::unit_sphere_area(1), 2.0, 1e-15);
  EXPECT_NEAR(quad::unit_sphere_area(2), 2.0 * std::numbers::pi, 1e-14);
  EXPECT_NEAR(quad::unit_sphere_area(3), 4.0 * std::numbers::pi, 1e-13);
}

TEST(Quadrature, PolarDisc) {
  const auto r = quad::integrate_polar([](double x, double y) { return x * x + y * y; }, 1.0);
  EXPECT_NEAR(r.value, std::numbers::pi / 2.0, 1e-10);
}

TEST(Quadrature, NonConvergenceThrows) {
  EXPECT_THROW(quad::integrate([](double x) { return 1.0 / x; }, 0.0, 1.0), quad::QuadratureError);
  EXPECT_THROW(quad::integrate([](double) { return std::numeric_limits<double>::quiet_NaN(); }, 0.0, 1.0),
               qsf::ConvergenceError);
}
