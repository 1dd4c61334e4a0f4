#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "moverfv/motion.hpp"

using namespace moverfv;

namespace {

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  return normalized(Vec3{g(rng), g(rng), g(rng)});
}

void expect_vec_near(const Vec3& a, const Vec3& b, double tol) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
  EXPECT_NEAR(a.z, b.z, tol);
}

}  // namespace

TEST(Motion, IdentityAnyTime) {
  const auto m = identity_motion();
  const Vec3 x{0.3, -0.2, 0.9};
  for (double t : {0.0, 1.0, 17.0}) expect_vec_near(m.evaluate(x, t), x, 0.0);
}

TEST(Motion, ShrinkingSphereLn2) {
  const auto m = shrinking_sphere();
  expect_vec_near(m.evaluate({0, 1, 0}, std::log(2.0)), {0, 0.5, 0}, 1e-16);
  expect_vec_near(m.evaluate({1, 0, 0}, 1.0), {0.36787944117144233, 0, 0}, 1e-16);
}

TEST(Motion, IdentityAtTimeZero) {
  std::mt19937_64 rng(3);
  const MotionMap motions[] = {identity_motion(), shrinking_sphere(), pinching_ellipsoid({})};
  for (const auto& m : motions) {
    for (int i = 0; i < 100; ++i) {
      Vec3 x = random_unit(rng);
      x = {2 * x.x, x.y, x.z};
      const Vec3 y = m.evaluate(x, 0.0);
      EXPECT_EQ(y.x, x.x);
      EXPECT_EQ(y.y, x.y);
      EXPECT_EQ(y.z, x.z);
    }
  }
}

TEST(Motion, NegativeTimeIsDomainError) {
  EXPECT_THROW(shrinking_sphere().evaluate({1, 0, 0}, -0.1), DomainError);
  const auto m = pinching_ellipsoid({});
  EXPECT_THROW(m.evaluate({2, 0, 0}, 1.5), DomainError);
  EXPECT_NO_THROW(m.evaluate({2, 0, 0}, 1.0));
}

TEST(Motion, ShrinkingSphereStaysOnSphere) {
  const auto m = shrinking_sphere();
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const Vec3 x = random_unit(rng);
    const double t = 0.01 * i;
    EXPECT_NEAR(norm(m.evaluate(x, t)), std::exp(-t), 1e-15);
    expect_vec_near(m.normal(m.evaluate(x, t), t), x, 1e-15);
  }
}

TEST(Pinch, WaistExamples) {
  const auto m = pinching_ellipsoid({});
  expect_vec_near(m.evaluate({0, 1, 0}, 0.0), {0, 1, 0}, 0.0);
  expect_vec_near(m.evaluate({0, 1, 0}, 1.0), {0, 0.4, 0}, 1e-15);
  // At the tip the Gaussian factor is exp(-16), so the tip stays put.
  expect_vec_near(m.evaluate({2, 0, 0}, 1.0), {2, 0, 0}, 0.0);
}

TEST(Pinch, TipFactorBelowThreshold) {
  PinchParameters p;
  p.axes = {3.0, 1.0, 1.0};
  p.width = 0.5;  // a1 / w = 6
  EXPECT_LT(1.0 - pinch_factor(p, 3.0, p.end_time), 1e-12);
  EXPECT_GT(1.0 - pinch_factor(p, 0.0, p.end_time), 0.59);
}

TEST(Pinch, KeepsFirstCoordinate) {
  const auto m = pinching_ellipsoid({});
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const Vec3 s = random_unit(rng);
    const Vec3 y{2 * s.x, s.y, s.z};
    for (double t : {0.25, 0.5, 1.0}) EXPECT_EQ(m.evaluate(y, t).x, y.x);
  }
}

TEST(Pinch, NormalMatchesImplicitSurface) {
  // The moved point must lie on the moved surface, and the analytic normal
  // must be orthogonal to finite-difference tangent vectors.
  const PinchParameters p;
  const auto m = pinching_ellipsoid(p);
  std::mt19937_64 rng(13);
  for (int i = 0; i < 500; ++i) {
    const Vec3 s = random_unit(rng);
    const double t = 0.8;
    const Vec3 y{2 * s.x, s.y, s.z};
    const Vec3 x = m.evaluate(y, t);
    const Vec3 n = m.normal(x, t);
    EXPECT_NEAR(norm(n), 1.0, 1e-14);
    // Tangent directions of the reference ellipsoid at y, pushed forward.
    const Vec3 ny = normalized(Vec3{y.x / 4, y.y, y.z});
    Vec3 e1 = normalized(cross(ny, Vec3{0.3, 0.5, 0.8}));
    Vec3 e2 = cross(ny, e1);
    for (const Vec3& e : {e1, e2}) {
      const double h = 1e-6;
      // Project back to the reference ellipsoid so both points are on it.
      auto on_ellipsoid = [](Vec3 q) {
        const double r = std::sqrt(q.x * q.x / 4 + q.y * q.y + q.z * q.z);
        return q / r;
      };
      const Vec3 d = m.evaluate(on_ellipsoid(y + h * e), t) - m.evaluate(on_ellipsoid(y - h * e), t);
      EXPECT_NEAR(dot(d / norm(d), n), 0.0, 1e-8);
    }
    // Outward: the normal points away from the axis inside the waist.
    EXPECT_GT(dot(n, x), 0.0);
  }
}

TEST(Pinch, InvalidParameters) {
  PinchParameters p;
  p.amplitude = 1.0;
  EXPECT_THROW(pinching_ellipsoid(p), ConfigError);
  p = {};
  p.width = 0.0;
  EXPECT_THROW(pinching_ellipsoid(p), ConfigError);
  p = {};
  p.end_time = -1.0;
  EXPECT_THROW(pinching_ellipsoid(p), ConfigError);
  p = {};
  p.axes = {1, 0, 1};
  EXPECT_THROW(pinching_ellipsoid(p), ConfigError);
}

TEST(Motion, RadialNormalAtOriginThrows) {
  EXPECT_THROW(radial_normal({0, 0, 0}, 0.0), DomainError);
}
