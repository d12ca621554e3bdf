#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "robinsym/errors.hpp"
#include "robinsym/model_geometry.hpp"

using namespace robinsym;

namespace {

constexpr double kPi = std::numbers::pi;

// Composite Simpson on the defining integral; independent of the closed forms.
double simpson_volume(int kappa, int n, double alpha, double r) {
  const int m = 20000;
  const double h = r / m;
  auto f = [&](double s) { return std::pow(kappa == 0 ? s : std::sin(s), n - 1); };
  double sum = f(0.0) + f(r);
  for (int i = 1; i < m; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(i * h);
  const double omega = std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
  return n * omega * alpha * sum * h / 3.0;
}

}  // namespace

TEST(SnKappa, Branches) {
  EXPECT_DOUBLE_EQ(sn_kappa(ModelSpace(0, 2, 1.0), 2.5), 2.5);
  EXPECT_NEAR(sn_kappa(ModelSpace(1, 2, 1.0), kPi / 2), 1.0, 1e-15);
  EXPECT_NEAR(sn_kappa(ModelSpace(1, 2, 1.0), kPi / 6), 0.5, 1e-15);
}

TEST(SnKappa, DomainErrors) {
  EXPECT_THROW(sn_kappa(ModelSpace(0, 2, 1.0), -0.1), DomainError);
  EXPECT_THROW(sn_kappa(ModelSpace(1, 3, 1.0), kPi + 0.01), DomainError);
  EXPECT_THROW(ModelSpace(2, 2, 1.0), DomainError);
  EXPECT_THROW(ModelSpace(0, 1, 1.0), DomainError);
  EXPECT_THROW(ModelSpace(0, 2, 1.5), DomainError);
  EXPECT_THROW(ModelSpace(0, 2, 0.0), DomainError);
}

TEST(ModelSpace, OmegaN) {
  EXPECT_NEAR(ModelSpace(0, 2, 1.0).omega_n(), kPi, 1e-15);
  EXPECT_NEAR(ModelSpace(0, 3, 1.0).omega_n(), 4.0 * kPi / 3.0, 1e-14);
  EXPECT_NEAR(ModelSpace(0, 4, 1.0).omega_n(), kPi * kPi / 2.0, 1e-14);
}

TEST(VolumeProfile, ClosedFormValues) {
  EXPECT_NEAR(volume_profile(ModelSpace(0, 2, 1.0), 1.0), kPi, 1e-14);
  EXPECT_NEAR(volume_profile(ModelSpace(1, 2, 1.0), kPi), 4.0 * kPi, 1e-13);
  for (int kappa : {0, 1})
    for (int n : {2, 3, 5}) EXPECT_EQ(volume_profile(ModelSpace(kappa, n, 0.7), 0.0), 0.0);
}

TEST(VolumeProfile, MatchesQuadratureOfDefinition) {
  for (int kappa : {0, 1})
    for (int n : {2, 3, 4, 5, 6})
      for (double r : {0.05, 0.4, 1.3, 2.9}) {
        const double expected = simpson_volume(kappa, n, 0.6, r);
        EXPECT_NEAR(volume_profile(ModelSpace(kappa, n, 0.6), r), expected, 1e-11 * expected)
            << "kappa=" << kappa << " n=" << n << " r=" << r;
      }
}

TEST(RadiusForVolume, Examples) {
  EXPECT_NEAR(radius_for_volume(ModelSpace(0, 2, 1.0), kPi), 1.0, 1e-15);
  EXPECT_NEAR(radius_for_volume(ModelSpace(1, 2, 1.0), 2.0 * kPi), kPi / 2, 1e-14);
  EXPECT_THROW(radius_for_volume(ModelSpace(1, 2, 1.0), 4.0 * kPi * 1.001), OutOfRangeError);
}

TEST(RadiusForVolume, RoundTripRandomRadii) {
  std::mt19937_64 rng(7);
  for (int kappa : {0, 1})
    for (int n : {2, 3, 4, 5}) {
      const ModelSpace space(kappa, n, 0.8);
      std::uniform_real_distribution<double> dist(1e-4, kappa == 1 ? kPi - 1e-4 : 10.0);
      for (int i = 0; i < 50; ++i) {
        const double r = dist(rng);
        const double vol = volume_profile(space, r);
        const double back = radius_for_volume(space, vol);
        EXPECT_NEAR(back, r, 1e-10 * std::max(1.0, r)) << kappa << " " << n;
        EXPECT_LE(std::abs(volume_profile(space, back) - vol), 1e-12 * vol);
      }
    }
}

TEST(RadiusForVolume, NearFullSphere) {
  const ModelSpace space(1, 3, 1.0);
  const double full = volume_profile(space, kPi);
  const double r = radius_for_volume(space, full * (1.0 - 1e-13));
  EXPECT_GT(r, kPi - 1e-3);
  EXPECT_LE(r, kPi);
  EXPECT_NEAR(radius_for_volume(space, full), kPi, 1e-15);
}

TEST(IsoperimetricProfile, Examples) {
  EXPECT_NEAR(isoperimetric_profile(ModelSpace(0, 2, 1.0), kPi), 2.0 * kPi, 1e-13);
  EXPECT_NEAR(isoperimetric_profile(ModelSpace(1, 2, 1.0), 2.0 * kPi), 2.0 * kPi, 1e-12);
  EXPECT_EQ(isoperimetric_profile(ModelSpace(1, 4, 0.5), 0.0), 0.0);
  // G_0(l) = 2 sqrt(pi alpha l) in the plane
  const ModelSpace plane(0, 2, 0.3);
  for (double l : {0.1, 1.0, 7.0}) EXPECT_NEAR(isoperimetric_profile(plane, l), 2.0 * std::sqrt(kPi * 0.3 * l), 1e-13);
  EXPECT_THROW(isoperimetric_profile(ModelSpace(1, 2, 1.0), 4.0 * kPi * 1.01), DomainError);
}

TEST(IsoperimetricProfile, EqualsDerivativeOfVolumeProfile) {
  for (int kappa : {0, 1})
    for (int n : {2, 3, 4}) {
      const ModelSpace space(kappa, n, 0.9);
      const double rmax = kappa == 1 ? kPi - 0.01 : 3.0;
      for (int i = 1; i <= 1000; ++i) {
        const double r = rmax * i / 1001.0;
        const double d = 1e-3 * std::min(std::max(r, 0.01), rmax - r);
        auto vp = [&](double x) { return volume_profile(space, x); };
        const double fd = (8.0 * (vp(r + d) - vp(r - d)) - (vp(r + 2 * d) - vp(r - 2 * d))) / (12.0 * d);
        const double g = isoperimetric_profile(space, volume_profile(space, r));
        EXPECT_NEAR(g, fd, 1e-8 * std::abs(fd) + 1e-13 * vp(r) / d) << kappa << " " << n << " " << r;
        // G(l) is ill-conditioned near the antipode: dG/dl = I''/I'.
        const double cond = std::abs(volume_profile_second_derivative(space, r)) / volume_profile_derivative(space, r);
        const double lerr = 8.0 * std::numeric_limits<double>::epsilon() * volume_profile(space, r);
        EXPECT_NEAR(g, volume_profile_derivative(space, r), 1e-9 * g + cond * lerr) << kappa << " " << n << " " << r;
      }
    }
}

TEST(VolumeProfile, StrictlyIncreasing) {
  for (int n : {2, 3, 5}) {
    const ModelSpace space(1, n, 1.0);
    double prev = 0.0;
    for (int i = 1; i <= 1000; ++i) {
      const double v = volume_profile(space, kPi * i / 1000.0);
      EXPECT_GT(v, prev);
      prev = v;
    }
  }
}

// l -> l^{1/p} G_1(l)^{-2} is non-decreasing for p = n / (2n - 2).
TEST(IsoperimetricProfile, SphereMonotoneQuotientAtEndpointExponent) {
  for (int n : {2, 3, 4, 5}) {
    const ModelSpace space(1, n, 1.0);
    const double p = n / (2.0 * n - 2.0);
    const double full = volume_profile(space, kPi);
    double prev = -1.0;
    for (int i = 1; i < 2000; ++i) {
      const double l = full * i / 2000.0;
      const double g = isoperimetric_profile(space, l);
      const double q = std::pow(l, 1.0 / p) / (g * g);
      if (prev >= 0.0) EXPECT_GE(q, prev - 1e-9 * prev) << "n=" << n << " l=" << l;
      prev = q;
    }
  }
}

// k(r) = I'(r)^2 - 2 p I(r) I''(r) >= 0 on [0, pi - 1e-3].
TEST(VolumeProfile, InnerInequalityOfSphereQuotient) {
  for (int n : {2, 3, 4, 5}) {
    const ModelSpace space(1, n, 1.0);
    const double p = n / (2.0 * n - 2.0);
    for (int i = 0; i <= 4000; ++i) {
      const double r = (kPi - 1e-3) * i / 4000.0;
      const double d1 = volume_profile_derivative(space, r);
      const double k = d1 * d1 - 2.0 * p * volume_profile(space, r) *
                                     volume_profile_second_derivative(space, r);
      EXPECT_GE(k, -1e-9) << "n=" << n << " r=" << r;
    }
  }
}

TEST(GeodesicBall, Volumes) {
  const GeodesicBall ball(ModelSpace(0, 2, 0.5), 2.0);
  EXPECT_NEAR(ball.weighted_volume(), 0.5 * kPi * 4.0, 1e-13);
  EXPECT_NEAR(ball.volume(), kPi * 4.0, 1e-13);
  EXPECT_THROW(GeodesicBall(ModelSpace(1, 2, 1.0), 4.0), DomainError);
}
