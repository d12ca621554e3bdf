#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <memory>
#include <numbers>

#include "robinsym/errors.hpp"
#include "robinsym/fem.hpp"
#include "robinsym/radial.hpp"
#include "robinsym/verify.hpp"

using namespace robinsym;

namespace {

constexpr double kPi = std::numbers::pi;

MeshPtr square(double h) {
  return std::make_shared<const MeasuredMesh>(generate_domain(SquareDomain{1.0, {}}, h, MetricModel::flat()));
}

MeshPtr disk(double h, double radius = 1.0) {
  return std::make_shared<const MeasuredMesh>(generate_domain(DiskDomain{radius, {}}, h, MetricModel::flat()));
}

ScalarField torsion_field(const MeshPtr& mesh, double beta) {
  return solve_robin_poisson(RobinProblem{mesh, beta, std::nullopt}).u;
}

RadialProfile matched_torsion(const MeshPtr& mesh, const ModelSpace& space, double beta) {
  const GeodesicBall ball(space, radius_for_volume(space, total_measure(*mesh)));
  return solve_symmetrized_poisson(ball, beta, RadialSource::constant(space, ball.radius, 1.0));
}

// Brute-force boundary integral of g(u) s along every edge, 400 midpoint cells per edge.
template <class G>
double boundary_brute(const ScalarField& u, G g) {
  const MeasuredMesh& mesh = u.mesh();
  double sum = 0.0;
  const int cells = 400;
  for (std::size_t e = 0; e < mesh.boundary_edges().size(); ++e) {
    const auto& ed = mesh.boundary_edges()[e];
    const Point2 a = mesh.vertices()[static_cast<std::size_t>(ed[0])];
    const Point2 b = mesh.vertices()[static_cast<std::size_t>(ed[1])];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const double u0 = u[static_cast<std::size_t>(ed[0])], u1 = u[static_cast<std::size_t>(ed[1])];
    const auto [s0, s1] = mesh.boundary_density()[e];
    for (int k = 0; k < cells; ++k) {
      const double x = (k + 0.5) / cells;
      sum += len / cells * g(u0 + (u1 - u0) * x) * (s0 + (s1 - s0) * x);
    }
  }
  return sum;
}

}  // namespace

// ---------------------------------------------------------------- reports and ranges

TEST(Reports, CsvRowMatchesHeader) {
  ComparisonReport r;
  r.check_id = "isoperimetric";
  r.lhs = 4.0;
  r.rhs = 2 * std::sqrt(kPi);
  r.passed = true;
  r.context = context_for(ModelSpace(0, 2, 1.0), 0.1, 2.0);
  const std::string row = r.csv_row();
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 11);
  EXPECT_EQ(row.rfind("isoperimetric,4,", 0), 0u);
  EXPECT_NE(row.find(",true,0.10000000000000001,2,nan,nan,0,2"), std::string::npos);
  const auto j = r.to_json();
  EXPECT_EQ(j["check_id"], "isoperimetric");
  EXPECT_EQ(j["context"]["beta"], 2.0);
}

TEST(Ranges, TheoremOne) {
  const ModelSpace e3(0, 3, 1.0), s3(1, 3, 1.0), s2(1, 2, 1.0), e2(0, 2, 1.0);
  EXPECT_THROW(require_theorem1_range(e3, 2.0, 1), RangeError);
  EXPECT_NO_THROW(require_theorem1_range(e3, 0.75, 1));
  EXPECT_NO_THROW(require_theorem1_range(e2, 1.0, 1));
  EXPECT_THROW(require_theorem1_range(e2, 1.01, 1), RangeError);
  EXPECT_NO_THROW(require_theorem1_range(e3, 0.6, 2));
  EXPECT_THROW(require_theorem1_range(e3, 0.61, 2), RangeError);
  EXPECT_NO_THROW(require_theorem1_range(s3, 0.5, 2));
  EXPECT_THROW(require_theorem1_range(s3, 0.55, 2), RangeError);
  EXPECT_NO_THROW(require_theorem1_range(s2, 1.0, 2));
  EXPECT_THROW(require_theorem1_range(e2, 1.0, 3), RangeError);
  EXPECT_THROW(require_theorem1_range(e2, 0.0, 1), RangeError);
}

TEST(Ranges, TheoremTwo) {
  const ModelSpace e3(0, 3, 1.0), s2(1, 2, 1.0), e2(0, 2, 1.0);
  EXPECT_NO_THROW(require_theorem2_range(e3, 3.0, 1, false));
  EXPECT_THROW(require_theorem2_range(e3, 3.1, 1, false), RangeError);
  EXPECT_NO_THROW(require_theorem2_range(e2, 50.0, 2, false));
  EXPECT_THROW(require_theorem2_range(s2, 1.0, 2, false), RangeError);
  EXPECT_NO_THROW(require_theorem2_range(e2, 1.0, 1, true));
  EXPECT_THROW(require_theorem2_range(s2, 1.0, 1, true), RangeError);
  EXPECT_THROW(require_theorem2_range(e3, 1.0, 1, true), RangeError);
}

// ---------------------------------------------------------------- preliminaries

TEST(Isoperimetric, SquareAndDisk) {
  const auto sq = check_isoperimetric(*square(0.1), ModelSpace(0, 2, 1.0));
  EXPECT_NEAR(sq.lhs, 4.0, 1e-12);
  EXPECT_NEAR(sq.rhs, 2 * std::sqrt(kPi), 1e-12);
  EXPECT_TRUE(sq.passed);

  const auto dk = check_isoperimetric(*disk(0.05), ModelSpace(0, 2, 1.0));
  EXPECT_TRUE(dk.passed);
  EXPECT_NEAR(dk.gap, 0.0, 1e-3);
}

TEST(Isoperimetric, SphericalCapIsExtremal) {
  const MeasuredMesh cap = generate_domain(SphericalCapDomain{kPi / 3}, 0.05, MetricModel::flat());
  const auto r = check_isoperimetric(cap, ModelSpace(1, 2, 1.0));
  EXPECT_TRUE(r.passed);
  EXPECT_NEAR(r.lhs / r.rhs, 1.0, 1e-3);
}

TEST(MinComparison, SquareBelowDisk) {
  const auto mesh = square(0.05);
  const ModelSpace space(0, 2, 1.0);
  const auto u = torsion_field(mesh, 1.0);
  const auto v = matched_torsion(mesh, space, 1.0);
  const auto r = check_min_comparison(u, v);
  EXPECT_NEAR(r.rhs, 1.0 / std::sqrt(kPi) / 2.0, 1e-9);
  EXPECT_TRUE(r.passed);

  const RadialProfile wrong = matched_torsion(disk(0.2, 2.0), space, 1.0);
  EXPECT_THROW(check_min_comparison(u, wrong), DomainError);
}

TEST(MeasureBound, SquareTorsion) {
  const auto mesh = square(0.05);
  const ModelSpace space(0, 2, 1.0);
  const auto r = check_measure_bound(torsion_field(mesh, 1.0), matched_torsion(mesh, space, 1.0));
  EXPECT_TRUE(r.passed);
}

// ---------------------------------------------------------------- lemmas

TEST(BoundaryIntegrals, MatchBruteForce) {
  const auto mesh = square(0.1);
  const auto u = torsion_field(mesh, 1.0);
  for (double t : {0.0, 0.2, 0.25, 0.27, 1.0}) {
    const double inv = boundary_brute(u, [&](double x) { return x > t ? 1.0 / x : 0.0; });
    EXPECT_NEAR(exterior_inverse_integral(u, t), inv, 2e-3 * (inv + 1e-3)) << t;
    const double len = boundary_brute(u, [&](double x) { return x > t ? 1.0 : 0.0; });
    EXPECT_NEAR(exterior_length(u, t), len, 2e-3 * (len + 1e-3)) << t;
    const double trunc = boundary_brute(u, [&](double x) { return std::min(x, t) * std::min(x, t) / (2 * x); });
    EXPECT_NEAR(truncated_flux_integral(u, t), trunc, 1e-6 * (trunc + 1e-3)) << t;
  }
}

TEST(Lemma32, FluxIdentityAboveMax) {
  const auto mesh = square(0.05);
  const auto u = torsion_field(mesh, 1.0);
  const RobinProblem prob{mesh, 1.0, std::nullopt};
  const auto r = check_lemma_32(u, prob, u.max());
  EXPECT_NEAR(r.lhs, r.rhs, 1e-8 * r.rhs);
  EXPECT_NEAR(r.rhs, 0.5, 1e-12);
  EXPECT_TRUE(r.passed);

  // Between the boundary extremes some edges are truncated: strict inequality.
  double bmin = 1e300, bmax = 0.0;
  for (const auto& e : mesh->boundary_edges())
    for (int v : e) {
      bmin = std::min(bmin, u[static_cast<std::size_t>(v)]);
      bmax = std::max(bmax, u[static_cast<std::size_t>(v)]);
    }
  const auto mid = check_lemma_32(u, prob, 0.5 * (bmin + bmax));
  EXPECT_TRUE(mid.passed);
  EXPECT_GT(mid.gap, 1e-6);
}

TEST(Lemma32, NonconstantSource) {
  const auto mesh = square(0.05);
  const ScalarField f = interpolate(mesh, [](Point2 p) { return 1.0 + p.x * p.y; });
  const RobinProblem prob{mesh, 2.0, f};
  const auto u = solve_robin_poisson(prob).u;
  const auto r = check_lemma_32(u, prob, 10.0);
  EXPECT_NEAR(r.rhs, 1.25 / 4.0, 1e-3);
  EXPECT_NEAR(r.lhs, r.rhs, 1e-8 * r.rhs);
}

TEST(Lemma31, SquareTorsionTwentyThresholds) {
  const auto mesh = square(0.05);
  const auto u = torsion_field(mesh, 1.0);
  const RobinProblem prob{mesh, 1.0, std::nullopt};
  std::vector<double> ts;
  for (int k = 1; k <= 20; ++k) ts.push_back(u.min() + (u.max() - u.min()) * (k - 0.37) / 20.0);
  const auto reps = check_lemma_31(u, prob, ModelSpace(0, 2, 1.0), ts);
  ASSERT_EQ(reps.size(), 20u);
  int evaluated = 0;
  for (const auto& r : reps) {
    EXPECT_TRUE(r.passed) << r.details.dump();
    evaluated += r.skipped ? 0 : 1;
  }
  EXPECT_GE(evaluated, 18);
}

TEST(Lemma31, DiskNearEquality) {
  const auto mesh = disk(0.03);
  const auto u = torsion_field(mesh, 1.0);
  const RobinProblem prob{mesh, 1.0, std::nullopt};
  std::vector<double> ts;
  for (int k = 1; k <= 5; ++k) ts.push_back(u.min() + (u.max() - u.min()) * (k + 0.13) / 6.5);
  for (const auto& r : check_lemma_31(u, prob, ModelSpace(0, 2, 1.0), ts)) {
    ASSERT_FALSE(r.skipped);
    EXPECT_TRUE(r.passed);
    EXPECT_NEAR(r.lhs / r.rhs, 1.0, 0.05) << r.details.dump();
  }
}

TEST(Lemma31, SkipsAboveMax) {
  const auto mesh = square(0.1);
  const auto u = torsion_field(mesh, 1.0);
  const auto reps = check_lemma_31(u, RobinProblem{mesh, 1.0, std::nullopt}, ModelSpace(0, 2, 1.0), {u.max() + 0.1});
  ASSERT_EQ(reps.size(), 1u);
  EXPECT_TRUE(reps[0].skipped);
}

// ---------------------------------------------------------------- profile functions

TEST(ProfileFunctions, EuclideanPlaneClosedForm) {
  for (double alpha : {1.0, 0.5}) {
    const ModelSpace space(0, 2, alpha);
    const auto pf = ProfileFunctions::torsion(space, 1.0, 2.0);
    EXPECT_EQ(pf.F(0.0), 0.0);
    EXPECT_EQ(pf.H(0.0), 0.0);
    for (double l : {1e-6, 0.01, 0.3, 1.0, 2.0}) {
      EXPECT_NEAR(pf.F(l), l * l / (8 * kPi * alpha), 1e-9 * l * l) << l;
      EXPECT_NEAR(pf.H(l), l * l * l / (96 * kPi * kPi * alpha * alpha), 1e-8 * l * l * l) << l;
    }
  }
}

TEST(ProfileFunctions, EuclideanGeneralDimension) {
  const int n = 3;
  const double p = 0.7, alpha = 0.8;
  const ModelSpace space(0, n, alpha);
  const auto pf = ProfileFunctions::torsion(space, p, 1.0);
  const double c = n * std::pow(space.omega_n() * alpha, 1.0 / n);
  const double e = 1.0 / p - 1.0 + 2.0 / n;
  EXPECT_NEAR(pf.small_volume_exponent(), e, 1e-15);
  for (double l : {1e-4, 0.1, 0.7, 1.0})
    EXPECT_NEAR(pf.F(l), std::pow(l, e + 1) / (c * c * (e + 1)), 1e-8 * pf.F(l)) << l;
}

TEST(ProfileFunctions, RoundSphereClosedForm) {
  // On the unit 2-sphere G(w)^2 = w (4 pi - w), so F(l) = int_0^l w / (4 pi - w) dw at p = 1.
  const ModelSpace space(1, 2, 1.0);
  const auto pf = ProfileFunctions::torsion(space, 1.0, 12.0);
  for (double l : {0.01, 1.0, 6.0, 12.0}) {
    const double exact = -l - 4 * kPi * std::log1p(-l / (4 * kPi));
    EXPECT_NEAR(pf.F(l), exact, 1e-8 * exact) << l;
  }
  double prev = 0.0;
  for (int k = 1; k <= 50; ++k) {
    const double h = pf.H(12.0 * k / 50);
    EXPECT_GT(h, prev);
    prev = h;
  }
}

TEST(ProfileFunctions, GeneralSourceAgainstQuadrature) {
  // f* = 2 - s / 2 on [0, 2]: S(w) = 2w - w^2/4.
  const ModelSpace space(1, 3, 1.0);
  auto S = [](double w) { return 2 * w - w * w / 4; };
  const auto pf = ProfileFunctions(space, 0.8, S, 2.0);
  for (double l : {0.3, 1.0, 2.0}) {
    auto g = [&](double w) {
      const double G = isoperimetric_profile(space, w);
      return std::pow(w, 1.0 / 0.8) * S(w) / (G * G);
    };
    const double ref = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, 0.0, l, 15, 1e-13);
    EXPECT_NEAR(pf.F(l), ref, 1e-7 * ref) << l;
  }
  EXPECT_THROW(pf.F(2.5), DomainError);
}

TEST(ProfileClaims, InsideTheStatedRanges) {
  struct Case {
    int kappa, n;
    double p;
    ProfileClaim claim;
  };
  const Case cases[] = {
      {1, 3, 0.75, ProfileClaim::A}, {0, 2, 1.0, ProfileClaim::A},    {1, 2, 1.0, ProfileClaim::A},
      {0, 3, 0.6, ProfileClaim::B},  {1, 3, 0.5, ProfileClaim::B},    {1, 2, 1.0, ProfileClaim::B},
      {0, 3, 3.0, ProfileClaim::C},  {1, 4, 2.0, ProfileClaim::C},    {0, 3, 3.0, ProfileClaim::D},
      {0, 2, 5.0, ProfileClaim::D},  {1, 5, 5.0 / 8, ProfileClaim::A},
  };
  for (const auto& c : cases) {
    const ModelSpace space(c.kappa, c.n, 1.0);
    ASSERT_TRUE(profile_claim_in_range(c.claim, space, c.p));
    const auto r = check_profile_monotonicity(space, c.p, c.claim);
    EXPECT_TRUE(r.passed) << to_string(c.claim) << " kappa=" << c.kappa << " n=" << c.n << " " << r.details.dump();
  }
}

TEST(ProfileClaims, OutsideRangeIsReportedNotRefused) {
  const ModelSpace space(1, 3, 1.0);
  EXPECT_FALSE(profile_claim_in_range(ProfileClaim::A, space, 0.9));
  const auto r = check_profile_monotonicity(space, 0.9, ProfileClaim::A);
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.details["violations"].get<int>(), 0);
  EXPECT_EQ(r.details["in_range"], false);
}

TEST(ProfileClaims, Parsing) {
  EXPECT_EQ(profile_claim_from_string("C"), ProfileClaim::C);
  EXPECT_EQ(to_string(ProfileClaim::D), "D");
  EXPECT_THROW(profile_claim_from_string("E"), DomainError);
  EXPECT_FALSE(profile_claim_in_range(ProfileClaim::D, ModelSpace(1, 3, 1.0), 1.0));
}

TEST(InnerInequality, HoldsAtTheEndpointExponent) {
  for (int n = 2; n <= 5; ++n) {
    const ModelSpace space(1, n, 1.0);
    const double p = n / (2.0 * n - 2.0);
    const auto r = check_inner_inequality(space, p);
    EXPECT_TRUE(r.passed) << n << " " << r.lhs;
    EXPECT_FALSE(check_inner_inequality(space, 1.2 * p).passed) << n;
  }
}

// ---------------------------------------------------------------- theorems

TEST(TheoremMain1, SquareWithBump) {
  const auto mesh = square(0.05);
  const ModelSpace space(0, 2, 1.0);
  const ScalarField f = interpolate(mesh, [](Point2 p) {
    const double dx = p.x - 0.3, dy = p.y - 0.6;
    return 1.0 + std::exp(-20 * (dx * dx + dy * dy));
  });
  const double beta = 1.0;
  const auto u = solve_robin_poisson(RobinProblem{mesh, beta, f}).u;
  const DistributionData df = distribution_function(f);
  const GeodesicBall ball(space, radius_for_volume(space, df.total()));
  const auto v = solve_symmetrized_poisson(ball, beta, RadialSource::rearranged(df, space));
  const auto r = check_theorem_main1(u, v, space, 1.0, 1);
  EXPECT_TRUE(r.passed) << r.lhs << " " << r.rhs;
  EXPECT_NEAR(r.lhs, integrate(u), 1e-9 * r.lhs);
  EXPECT_TRUE(check_theorem_main1(u, v, space, 0.5, 2).passed);
  EXPECT_THROW(check_theorem_main1(u, v, space, 1.5, 1), RangeError);
}

TEST(TheoremMain1, DiskIsNearEquality) {
  const auto mesh = disk(0.03);
  const ModelSpace space(0, 2, 1.0);
  const auto u = torsion_field(mesh, 1.0);
  const auto v = matched_torsion(mesh, space, 1.0);
  const auto r = check_theorem_main1(u, v, space, 1.0, 1);
  EXPECT_TRUE(r.passed);
  EXPECT_NEAR(r.lhs / r.rhs, 1.0, 2e-3);
}

TEST(TheoremMain2, SquarePointwiseAndNorms) {
  const auto mesh = square(0.02);
  const ModelSpace space(0, 2, 1.0);
  const RobinProblem prob{mesh, 1.0, std::nullopt};
  const auto u = solve_robin_poisson(prob).u;
  const auto v = matched_torsion(mesh, space, 1.0);
  const auto pw = check_theorem_main2(u, v, prob, space, 1.0, 1, true);
  EXPECT_TRUE(pw.passed) << pw.lhs;
  EXPECT_LT(pw.lhs, 0.0);
  EXPECT_TRUE(check_theorem_main2(u, v, prob, space, 4.0, 1, false).passed);
  EXPECT_TRUE(check_theorem_main2(u, v, prob, space, 2.0, 2, false).passed);

  const RobinProblem other{mesh, 1.0, interpolate(mesh, [](Point2) { return 2.0; })};
  EXPECT_THROW(check_theorem_main2(u, v, other, space, 1.0, 1, true), RangeError);
}

TEST(TheoremMain2, DiskPointwiseEquality) {
  const auto mesh = disk(0.03);
  const ModelSpace space(0, 2, 1.0);
  const RobinProblem prob{mesh, 1.0, std::nullopt};
  const auto r = check_theorem_main2(solve_robin_poisson(prob).u, matched_torsion(mesh, space, 1.0), prob, space,
                                     1.0, 1, true);
  EXPECT_TRUE(r.passed);
  EXPECT_LT(std::abs(r.lhs), 2e-3);
}

TEST(SaintVenant, SquareAgainstClosedFormDisk) {
  const auto mesh = square(0.05);
  const ModelSpace space(0, 2, 1.0);
  const auto r = check_saint_venant(mesh, space, 1.0);
  const double R = 1.0 / std::sqrt(kPi);
  EXPECT_NEAR(r.rhs, kPi * std::pow(R, 4) / 8 + kPi * std::pow(R, 3) / 2, 1e-9);
  EXPECT_TRUE(r.passed);
  EXPECT_GT(r.gap, 0.0);

  const auto d = check_saint_venant(disk(0.03), space, 1.0);
  EXPECT_TRUE(d.passed);
  EXPECT_NEAR(d.lhs / d.rhs, 1.0, 1e-3);
}

TEST(BosselDaners, SquareAboveDiskAcrossBeta) {
  const auto mesh = square(0.05);
  const ModelSpace space(0, 2, 1.0);
  for (double beta : {0.1, 1.0, 10.0}) {
    const auto r = check_bossel_daners(mesh, space, beta);
    EXPECT_TRUE(r.passed) << beta;
    EXPECT_GT(r.gap, 0.0) << beta;
  }
}

// ---------------------------------------------------------------- Bossel functional

TEST(BosselFunctional, EigenfieldReproducesLambda) {
  const auto mesh = disk(0.04);
  const double beta = 1.0;
  const auto eig = solve_robin_eigen(mesh, beta);
  std::vector<double> ts;
  for (int k = 0; k < 10; ++k) ts.push_back(eig.field.min() + (1.0 - eig.field.min()) * (k + 0.5) / 10.5);
  const auto r = check_bossel_functional(eig.field, eig.lambda, beta, ts);
  EXPECT_TRUE(r.passed) << r.details.dump();
}

TEST(BosselFunctional, RejectsInadmissiblePhi) {
  const auto mesh = disk(0.1);
  const double beta = 1.0;
  const auto eig = solve_robin_eigen(mesh, beta);
  const double t = 0.5 * (1.0 + eig.field.min());
  std::vector<double> high(mesh->vertex_count(), 0.5);
  high[static_cast<std::size_t>(mesh->boundary_edges()[0][0])] = beta + 0.1;
  EXPECT_THROW(bossel_functional(eig.field, ScalarField(mesh, high), beta, t), AdmissibilityError);
  std::vector<double> neg(mesh->vertex_count(), 0.5);
  neg[0] = -0.1;
  EXPECT_THROW(bossel_functional(eig.field, ScalarField(mesh, neg), beta, t), AdmissibilityError);
  EXPECT_THROW(bossel_functional(eig.field, ScalarField(mesh, std::vector<double>(mesh->vertex_count(), 0.5)), beta, 1.2),
               DomainError);
}

TEST(BosselFunctional, PerturbedPhiFallsBelow) {
  const auto mesh = square(0.05);
  const double beta = 1.0;
  const auto eig = solve_robin_eigen(mesh, beta);
  const auto tf = eigen_test_function(eig.field, beta);
  std::vector<double> pert(tf.phi.values());
  for (std::size_t i = 0; i < pert.size(); ++i)
    if (!mesh->is_boundary_vertex(static_cast<int>(i))) pert[i] += 0.5;
  const ScalarField phi(mesh, pert);
  double lowest = 1e300;
  for (int k = 1; k <= 8; ++k) {
    const double t = eig.field.min() + (1.0 - eig.field.min()) * k / 9.0;
    lowest = std::min(lowest, bossel_functional(eig.field, phi, beta, t));
  }
  EXPECT_LT(lowest, eig.lambda);
}

TEST(BosselFunctional, BallVersionIsLambda) {
  for (const ModelSpace& space : {ModelSpace(0, 2, 1.0), ModelSpace(0, 3, 1.0), ModelSpace(1, 2, 1.0)}) {
    const GeodesicBall ball(space, 1.0);
    const auto eig = solve_radial_eigen(ball, 2.0);
    const auto logd = log_derivative_profile(eig.profile);
    for (double r : {0.1, 0.5, 0.9, 1.0})
      EXPECT_NEAR(bossel_functional_ball(logd, r), eig.lambda, 1e-5 * eig.lambda) << r;
  }
}
