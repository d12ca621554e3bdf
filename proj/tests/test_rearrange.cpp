#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "robinsym/errors.hpp"
#include "robinsym/fem.hpp"
#include "robinsym/rearrange.hpp"

using namespace robinsym;

namespace {

constexpr double kPi = std::numbers::pi;

MeshPtr square(double h, MetricModel metric = MetricModel::flat()) {
  return std::make_shared<const MeasuredMesh>(generate_domain(SquareDomain{1.0, {}}, h, metric));
}

MeshPtr warped_disk(double h) {
  return std::make_shared<const MeasuredMesh>(
      generate_domain(DiskDomain{1.0, {}}, h, MetricModel::warped(WarpedSurfaceSpec("exp_blend", 0.5))));
}

ScalarField wavy(const MeshPtr& mesh) {
  return interpolate(mesh, [](Point2 p) { return std::sin(3.0 * p.x + 1.0) * std::cos(2.0 * p.y) + 0.3 * p.x * p.y; });
}

// Area of the part of a chart triangle where the linear function g > 0, by half-plane clipping.
double clipped_area(std::array<Point2, 3> tri, std::array<double, 3> g) {
  std::vector<std::pair<Point2, double>> poly;
  for (int i = 0; i < 3; ++i) {
    const auto a = tri[i], b = tri[(i + 1) % 3];
    const double ga = g[i], gb = g[(i + 1) % 3];
    if (ga > 0) poly.push_back({a, ga});
    if ((ga > 0) != (gb > 0)) {
      const double s = ga / (ga - gb);
      poly.push_back({Point2{a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)}, 0.0});
    }
  }
  double area = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i].first;
    const auto& q = poly[(i + 1) % poly.size()].first;
    area += p.x * q.y - q.x * p.y;
  }
  return std::abs(area) / 2.0;
}

double clipped_mu(const ScalarField& f, double t) {
  const auto& mesh = f.mesh();
  double mu = 0.0;
  for (std::size_t k = 0; k < mesh.triangle_count(); ++k) {
    const auto& tri = mesh.triangles()[k];
    const std::array<Point2, 3> p{mesh.vertices()[tri[0]], mesh.vertices()[tri[1]], mesh.vertices()[tri[2]]};
    const std::array<double, 3> up{f[tri[0]] - t, f[tri[1]] - t, f[tri[2]] - t};
    const std::array<double, 3> dn{-f[tri[0]] - t, -f[tri[1]] - t, -f[tri[2]] - t};
    const double chart = clipped_area(p, up) + clipped_area(p, dn);
    mu += chart * mesh.centroid_density(k);
  }
  return mu;
}

double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST(SplitAtZero, PiecesTileTheTriangle) {
  for (auto v : {std::array<double, 3>{1, -2, 0.5}, std::array<double, 3>{-1, 0, 1}, std::array<double, 3>{0, 0, 1},
                 std::array<double, 3>{2, -1, -3}}) {
    double area = 0.0;
    for (const auto& piece : split_at_zero(v)) {
      const double d = piece[0][0] * (piece[1][1] * piece[2][2] - piece[1][2] * piece[2][1]) -
                       piece[0][1] * (piece[1][0] * piece[2][2] - piece[1][2] * piece[2][0]) +
                       piece[0][2] * (piece[1][0] * piece[2][1] - piece[1][1] * piece[2][0]);
      area += std::abs(d);
      int sign = 0;
      for (const auto& b : piece) {
        const double x = b[0] * v[0] + b[1] * v[1] + b[2] * v[2];
        if (std::abs(x) > 1e-14) {
          const int s = x > 0 ? 1 : -1;
          EXPECT_TRUE(sign == 0 || sign == s);
          sign = s;
        }
      }
    }
    EXPECT_NEAR(area, 1.0, 1e-14);
  }
}

TEST(Distribution, LinearOnSquare) {
  const auto mesh = square(0.1);
  const auto d = distribution_function(interpolate(mesh, [](Point2 p) { return p.x; }));
  EXPECT_NEAR(d.total(), 1.0, 1e-14);
  for (double t : {0.0, 0.1, 0.33, 0.5, 0.77, 0.999}) EXPECT_NEAR(d(t), 1.0 - t, 1e-13);
  EXPECT_EQ(d(1.0), 0.0);
  EXPECT_NEAR(d(-0.5), 1.0, 1e-14);
  for (double s : {0.0, 0.2, 0.5, 0.9, 1.0}) EXPECT_NEAR(d.decreasing_rearrangement(s), 1.0 - s, 1e-12);
  EXPECT_THROW(d.decreasing_rearrangement(1.5), DomainError);
  const auto sharp = schwarz_rearrangement(d, ModelSpace(0, 2, 1.0));
  EXPECT_NEAR(sharp.radius(), 1.0 / std::sqrt(kPi), 1e-13);
  for (double r : {0.0, 0.1, 0.3, 0.5}) EXPECT_NEAR(sharp(r), 1.0 - kPi * r * r, 1e-12);
}

TEST(Distribution, ConstantFieldIsOneJump) {
  const auto mesh = square(0.2);
  const auto d = distribution_function(interpolate(mesh, [](Point2) { return -2.0; }));
  EXPECT_EQ(d.breakpoints().size(), 1u);
  EXPECT_NEAR(d(1.999), 1.0, 1e-14);
  EXPECT_EQ(d(2.0), 0.0);
  EXPECT_NEAR(d.left_limit(2.0), 1.0, 1e-14);
  EXPECT_EQ(d.decreasing_rearrangement(0.0), 2.0);
  EXPECT_EQ(d.decreasing_rearrangement(1.0), 2.0);
  EXPECT_TRUE(std::isnan(d.derivative(2.0)));
}

TEST(Distribution, PlateauGivesJump) {
  const auto mesh = square(0.05);
  const auto f = interpolate(mesh, [](Point2 p) { return std::min(p.x, 0.5); });
  const auto d = distribution_function(f);
  EXPECT_EQ(d(0.5), 0.0);
  // the interpolant is flat on triangles with every vertex at x >= 0.5
  EXPECT_NEAR(d.left_limit(0.5), clipped_mu(f, 0.5 - 1e-13), 1e-10);
  EXPECT_GE(d.left_limit(0.5), 0.45);
  EXPECT_NEAR(d(0.25), 0.75, 1e-13);
  EXPECT_EQ(d.decreasing_rearrangement(0.3), 0.5);
  EXPECT_EQ(d.decreasing_rearrangement(0.0), 0.5);
  EXPECT_NEAR(d.decreasing_rearrangement(0.75), 0.25, 1e-12);
}

TEST(Distribution, MatchesPolygonClipping) {
  const auto mesh = warped_disk(0.1);
  const auto f = wavy(mesh);
  const auto d = distribution_function(f);
  const double lo = -1.5, hi = 1.5;
  for (int i = 0; i < 1000; ++i) {
    const double t = std::abs(lo + (hi - lo) * (i + 0.5) / 1000.0);
    EXPECT_NEAR(d(t), clipped_mu(f, t), 1e-12 * d.total()) << "t=" << t;
  }
  EXPECT_NEAR(d.total(), total_measure(*mesh), 1e-12 * d.total());
}

TEST(Distribution, MatchesMonteCarlo) {
  const auto mesh = square(0.1, MetricModel::warped(WarpedSurfaceSpec("atan_blend", 0.3)));
  const auto f = wavy(mesh);
  const auto d = distribution_function(f);
  std::vector<double> w(mesh->triangle_count());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = mesh->chart_area(k) * mesh->centroid_density(k);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::uniform_real_distribution<double> u01;
  std::mt19937_64 rng(42);
  const int n = 1000000;
  std::vector<double> samples(n);
  for (auto& s : samples) {
    double a = u01(rng), b = u01(rng);
    if (a + b > 1) {
      a = 1 - a;
      b = 1 - b;
    }
    s = std::abs(f.at(pick(rng), Bary{1 - a - b, a, b}));
  }
  for (int i = 0; i < 20; ++i) {
    const double t = 1.1 * (i + 0.5) / 20.0;
    const double frac = static_cast<double>(std::count_if(samples.begin(), samples.end(), [t](double x) { return x > t; })) / n;
    const double se = d.total() * std::sqrt(std::max(frac * (1 - frac), 1e-12) / n);
    EXPECT_NEAR(d(t), frac * d.total(), 3.0 * se) << "t=" << t;
  }
}

TEST(Distribution, MonotoneRightContinuousAndDerivative) {
  const auto f = wavy(warped_disk(0.15));
  const auto d = distribution_function(f);
  double prev = d.total();
  for (int i = 0; i <= 2000; ++i) {
    const double t = -0.1 + 1.6 * i / 2000.0;
    EXPECT_LE(d(t), prev + 1e-14);
    EXPECT_GE(d.left_limit(t), d(t) - 1e-14);
    prev = d(t);
  }
  const auto& bp = d.breakpoints();
  for (std::size_t k = 1; k + 1 < bp.size(); k += 7) {
    const double t = 0.5 * (bp[k] + bp[k + 1]);
    const double e = 1e-6 * (bp[k] - bp[k + 1]);
    EXPECT_NEAR(d.derivative(t), (d(t + e) - d(t - e)) / (2 * e), 1e-5 * std::abs(d.derivative(t)) + 1e-9);
  }
}

TEST(Rearrangement, InverseRelationsAndLayerCake) {
  const auto f = wavy(warped_disk(0.1));
  const auto d = distribution_function(f);
  for (int i = 0; i <= 200; ++i) {
    const double s = d.total() * i / 200.0;
    const double h = d.decreasing_rearrangement(s);
    EXPECT_LE(d(h), s + 1e-12);
    if (s < d.total()) EXPECT_GE(d.left_limit(h), s - 1e-12);
  }
  // int_0^T h* = int |h|
  EXPECT_NEAR(d.cumulative_rearrangement(d.total()), integrate_power(f, 1.0), 1e-10);
  EXPECT_NEAR(d.tail_integral(0.0), integrate_power(f, 1.0), 1e-10);
  const double l = 0.37 * d.total();
  const double num = simpson([&](double s) { return d.decreasing_rearrangement(s); }, 0.0, l, 20000);
  EXPECT_NEAR(d.cumulative_rearrangement(l), num, 1e-7);
}

TEST(Rearrangement, SchwarzPreservesNormsAndLevelSets) {
  const auto f = wavy(warped_disk(0.1));
  const auto d = distribution_function(f);
  const ModelSpace space(0, 2, 0.5);
  const auto sharp = schwarz_rearrangement(d, space);
  EXPECT_NEAR(volume_profile(space, sharp.radius()), d.total(), 1e-12 * d.total());
  EXPECT_TRUE(sharp.non_increasing());
  for (double p : {1.0, 2.0, 4.0}) {
    const double lhs = integrate_power(f, p);
    EXPECT_NEAR(space.alpha() * sharp.integrate_power(p), lhs, 1e-8 * lhs) << "p=" << p;
  }
  // |{h > t}| = alpha |{h# > t}| at 50 thresholds
  for (int i = 0; i < 50; ++i) {
    const double t = d.max_value() * (i + 0.5) / 50.0;
    double a = 0.0, b = sharp.radius();
    for (int it = 0; it < 100; ++it) {
      const double m = 0.5 * (a + b);
      (sharp(m) > t ? a : b) = m;
    }
    const double unweighted = volume_profile(space, b) / space.alpha();
    EXPECT_NEAR(space.alpha() * unweighted, d(t), 1e-9 * d.total()) << "t=" << t;
  }
}

TEST(Rearrangement, SphereOverflow) {
  const auto mesh = square(0.2);
  const auto d = distribution_function(interpolate(mesh, [](Point2 p) { return p.x; }));
  const DistributionData big({1.0, 0.0}, {{20.0, -20.0, 0.0}}, 20.0);
  EXPECT_THROW(schwarz_rearrangement(big, ModelSpace(1, 2, 1.0)), OutOfRangeError);
  const auto cap = schwarz_rearrangement(d, ModelSpace(1, 2, 1.0));
  EXPECT_NEAR(volume_profile(ModelSpace(1, 2, 1.0), cap.radius()), 1.0, 1e-12);
}

TEST(Lorentz, DiagonalIsLebesgueNorm) {
  const auto f = wavy(warped_disk(0.1));
  const auto d = distribution_function(f);
  for (double p : {1.0, 2.0, 3.0, 1.5}) {
    const double lp = std::pow(integrate_power(f, p), 1.0 / p);
    EXPECT_NEAR(lorentz_norm(d, {p, p}), lp, 1e-9 * lp) << "p=" << p;
  }
}

TEST(Lorentz, ConstantField) {
  const auto mesh = square(0.2);
  const double c = 1.7;
  const auto d = distribution_function(interpolate(mesh, [c](Point2) { return c; }));
  for (double p : {0.5, 1.0, 2.0}) {
    EXPECT_NEAR(lorentz_norm(d, {p, 1.0}), p * c, 1e-13);
    EXPECT_NEAR(lorentz_norm(d, {p, LorentzParams::infinity()}), std::pow(c, p), 1e-13);
  }
}

TEST(Lorentz, LinearFieldClosedForms) {
  // u = x on the unit square: mu = 1 - t.
  const auto d = distribution_function(interpolate(square(0.1), [](Point2 p) { return p.x; }));
  // q = 1: p int_0^1 (1-t)^{1/p} dt = p / (1 + 1/p)
  for (double p : {1.0, 2.0, 0.5, 1.3}) EXPECT_NEAR(lorentz_norm(d, {p, 1.0}), p / (1.0 + 1.0 / p), 1e-10);
  // q = inf: sup t^p (1 - t) at t = p / (p + 1)
  for (double p : {1.0, 2.0, 0.5}) {
    const double t = p / (p + 1);
    EXPECT_NEAR(lorentz_norm(d, {p, LorentzParams::infinity()}), std::pow(t, p) * (1 - t), 1e-13);
  }
}

// ||f||_{p,r} <= (q/p)^{1/q - 1/r} ||f||_{p,q} for q < r, including r = inf for sup t mu^{1/p}.
TEST(Lorentz, NestingInSecondIndex) {
  const auto d = distribution_function(wavy(warped_disk(0.1)));
  const std::vector<double> qs{0.5, 1.0, 2.0, 4.0, 8.0};
  for (double p : {1.0, 1.5, 3.0}) {
    const double weak = std::pow(lorentz_norm(d, {p, LorentzParams::infinity()}), 1.0 / p);
    for (std::size_t i = 0; i < qs.size(); ++i) {
      const double q = qs[i];
      const double nq = lorentz_norm(d, {p, q});
      EXPECT_LE(weak, std::pow(q / p, 1.0 / q) * nq * (1 + 1e-12)) << "p=" << p << " q=" << q;
      for (std::size_t j = i + 1; j < qs.size(); ++j) {
        const double r = qs[j];
        EXPECT_LE(lorentz_norm(d, {p, r}), std::pow(q / p, 1.0 / q - 1.0 / r) * nq * (1 + 1e-12))
            << "p=" << p << " q=" << q << " r=" << r;
      }
    }
  }
}

TEST(Lorentz, RejectsBadExponents) {
  const auto d = distribution_function(interpolate(square(0.2), [](Point2 p) { return p.x; }));
  EXPECT_THROW(lorentz_norm(d, {0.0, 1.0}), DomainError);
  EXPECT_THROW(lorentz_norm(d, {1.0, -1.0}), DomainError);
}

TEST(HardyLittlewood, RandomPairs) {
  const auto mesh = square(0.15);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> a(mesh->vertex_count()), b(mesh->vertex_count());
    for (auto& x : a) x = g(rng);
    for (auto& x : b) x = g(rng) + 0.5;
    const auto [lhs, rhs] = hardy_littlewood_check(ScalarField(mesh, a), ScalarField(mesh, b));
    EXPECT_LE(lhs, rhs * (1 + 1e-10)) << "pair " << i;
  }
}

TEST(HardyLittlewood, EqualityCases) {
  const auto mesh = warped_disk(0.1);
  const auto f = wavy(mesh);
  const auto [lhs, rhs] = hardy_littlewood_check(f, f);
  EXPECT_NEAR(lhs, integrate_power(f, 2.0), 1e-12);
  EXPECT_NEAR(lhs, rhs, 1e-10 * rhs);
  const auto one = interpolate(mesh, [](Point2) { return 3.0; });
  const auto [l2, r2] = hardy_littlewood_check(one, f);
  EXPECT_NEAR(l2, 3.0 * integrate_power(f, 1.0), 1e-12);
  EXPECT_NEAR(l2, r2, 1e-10 * r2);
}

TEST(DistributionData, CsvAndValidation) {
  const DistributionData d({2.0, 1.0, 0.0}, {{1.0, -1.0, 0.0}, {3.0, -2.0, 0.0}}, 3.0);
  EXPECT_EQ(d.to_csv(), "t,mu\n2,0\n1,1\n0,3\n");
  EXPECT_NEAR(d.tail_integral(0.0), 0.5 + 2.0, 1e-15);
  EXPECT_THROW(DistributionData({0.0, 1.0}, {{}}, 1.0), DomainError);
  EXPECT_THROW(DistributionData({1.0, 0.0}, {}, 1.0), DomainError);
}
