#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "robinsym/errors.hpp"
#include "robinsym/fem.hpp"

using namespace robinsym;

namespace {

constexpr double kPi = std::numbers::pi;

MeshPtr unit_square_two_triangles() {
  return std::make_shared<const MeasuredMesh>(mesh_from_json_text(
      R"({"geometry": "flat", "vertices": [[0,0],[1,0],[1,1],[0,1]],
          "triangles": [[0,1,2],[0,2,3]], "boundary_edges": [[0,1],[1,2],[2,3],[3,0]]})"));
}

MeshPtr disk(double h, double radius = 1.0) {
  return std::make_shared<const MeasuredMesh>(generate_domain(DiskDomain{radius, {}}, h, MetricModel::flat()));
}

// Bisection root of a continuous function with a sign change on [a, b].
template <class F>
double bisect(F f, double a, double b) {
  double fa = f(a);
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

double bessel_j0_root() {
  return bisect([](double k) { return std::cyl_bessel_j(0.0, k); }, 2.0, 3.0);
}

// Robin disk of radius 1: k J1(k) = beta J0(k).
double robin_disk_k(double beta) {
  return bisect([beta](double k) { return k * std::cyl_bessel_j(1.0, k) - beta * std::cyl_bessel_j(0.0, k); },
                1e-6, bessel_j0_root());
}

double max_torsion_error(const PoissonSolution& s, double beta) {
  double err = 0.0;
  const auto& v = s.u.mesh().vertices();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double r2 = v[i].x * v[i].x + v[i].y * v[i].y;
    err = std::max(err, std::abs(s.u[i] - ((1.0 - r2) / 4.0 + 1.0 / (2.0 * beta))));
  }
  return err;
}

}  // namespace

TEST(Assemble, TwoTriangleSquare) {
  const auto mesh = unit_square_two_triangles();
  const auto sys = assemble(RobinProblem{mesh, 1.0, std::nullopt});
  EXPECT_NEAR(Vector(sys.mass * Vector::Ones(4)).sum(), 1.0, 1e-12);
  EXPECT_LE(Vector(sys.stiffness * Vector::Ones(4)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(Vector(sys.boundary_mass * Vector::Ones(4)).sum(), 4.0, 1e-12);
  EXPECT_NEAR(sys.load.sum(), 1.0, 1e-12);
}

TEST(Assemble, MatricesAreSymmetric) {
  const auto mesh = std::make_shared<const MeasuredMesh>(
      generate_domain(DiskDomain{1.5, {}}, 0.2, MetricModel::warped(WarpedSurfaceSpec("exp_blend", 0.5))));
  const auto sys = assemble(RobinProblem{mesh, 2.0, std::nullopt});
  for (const SparseMatrix* m : {&sys.stiffness, &sys.mass, &sys.boundary_mass}) {
    const SparseMatrix d = *m - SparseMatrix(m->transpose());
    EXPECT_LE(d.norm(), 1e-12 * m->norm());
  }
}

TEST(Assemble, StiffnessSemidefiniteWithConstantKernel) {
  const auto mesh = disk(0.2);
  const auto sys = assemble(RobinProblem{mesh, 1.0, std::nullopt});
  EXPECT_LE(Vector(sys.stiffness * Vector::Ones(sys.stiffness.rows())).cwiseAbs().maxCoeff(), 1e-12);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int i = 0; i < 20; ++i) {
    Vector x(sys.stiffness.rows());
    for (auto& c : x) c = g(rng);
    EXPECT_GT(x.dot(sys.stiffness * x), 0.0);
  }
}

TEST(Assemble, DiskLoadIsArea) {
  const auto sys = assemble(RobinProblem{disk(0.05), 1.0, std::nullopt});
  EXPECT_NEAR(sys.load.sum(), kPi, 2e-3);
}

// Dirichlet energy of u = r^2 on the cone dr^2 + (c r)^2 dtheta^2 over r < 1 is 2 pi c.
TEST(Assemble, WarpedStiffnessMatchesRadialEnergy) {
  const double c = 0.6;
  double prev_err = 0.0;
  for (double h : {0.1, 0.05}) {
    const auto mesh = std::make_shared<const MeasuredMesh>(
        generate_domain(DiskDomain{1.0, {}}, h, MetricModel::warped(WarpedSurfaceSpec("cone", c))));
    const auto k = assemble_stiffness(*mesh);
    const Vector u = to_vector(interpolate(mesh, [](Point2 p) { return p.x * p.x + p.y * p.y; }));
    const double err = std::abs(u.dot(k * u) - 2.0 * kPi * c);
    EXPECT_LT(err, 0.05);
    if (prev_err > 0.0) EXPECT_GT(prev_err / err, 3.0);
    prev_err = err;
  }
}

TEST(Assemble, SphereMassIsCapArea) {
  const auto mesh =
      std::make_shared<const MeasuredMesh>(generate_domain(SphericalCapDomain{kPi / 3}, 0.05, MetricModel::flat()));
  const auto sys = assemble(RobinProblem{mesh, 1.0, std::nullopt});
  EXPECT_NEAR(sys.load.sum(), 2.0 * kPi * (1.0 - std::cos(kPi / 3)), 1e-3);
}

TEST(RobinProblem, RejectsInvalidData) {
  const auto mesh = unit_square_two_triangles();
  EXPECT_THROW(assemble(RobinProblem{mesh, 0.0, std::nullopt}), DomainError);
  EXPECT_THROW(assemble(RobinProblem{mesh, 1.0, ScalarField(mesh, {1.0, -1.0, 1.0, 1.0})}), DomainError);
  EXPECT_THROW(assemble(RobinProblem{mesh, 1.0, ScalarField(mesh, {0.0, 0.0, 0.0, 0.0})}), DomainError);
}

TEST(SolveRobinPoisson, DiskTorsionMatchesClosedForm) {
  const auto s = solve_robin_poisson(RobinProblem{disk(0.02), 1.0, std::nullopt});
  EXPECT_NEAR(s.u.max(), 0.75, 5e-3);
  EXPECT_NEAR(s.u.min(), 0.5, 5e-3);
  EXPECT_LE(max_torsion_error(s, 1.0), 5e-3);
  EXPECT_TRUE(s.warnings.empty());
}

TEST(SolveRobinPoisson, ConvergesAtSecondOrder) {
  const double e1 = max_torsion_error(solve_robin_poisson(RobinProblem{disk(0.08), 1.0, std::nullopt}), 1.0);
  const double e2 = max_torsion_error(solve_robin_poisson(RobinProblem{disk(0.04), 1.0, std::nullopt}), 1.0);
  EXPECT_GE(e1 / e2, 3.0);
}

TEST(SolveRobinPoisson, DirichletLimit) {
  const auto s = solve_robin_poisson(RobinProblem{disk(0.05), 1e6, std::nullopt});
  EXPECT_NEAR(s.u.max(), 0.25, 1e-2);
}

TEST(SolveRobinPoisson, WeakFormAndFluxIdentity) {
  const auto mesh = std::make_shared<const MeasuredMesh>(generate_domain(SquareDomain{1.0, {}}, 0.05, MetricModel::flat()));
  const auto f = interpolate(mesh, [](Point2 p) { return 1.0 + std::sin(3 * p.x) * std::sin(3 * p.x) + p.y; });
  const double beta = 2.5;
  const RobinProblem problem{mesh, beta, f};
  const auto s = solve_robin_poisson(problem);
  const auto sys = assemble(problem);
  const Vector u = to_vector(s.u);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    Vector phi(u.size());
    for (auto& c : phi) c = dist(rng);
    const double r = phi.dot(sys.stiffness * u) + beta * phi.dot(sys.boundary_mass * u) - phi.dot(sys.mass * to_vector(f));
    EXPECT_LE(std::abs(r), 1e-8 * phi.norm());
  }
  EXPECT_NEAR(beta * integrate_boundary(s.u), integrate(f), 1e-9 * integrate(f));
  EXPECT_NEAR(integrate(f), sys.load.sum(), 1e-12);
}

TEST(SolveRobinEigen, DirichletLimitIsBesselRootSquared) {
  const double j0 = bessel_j0_root();
  EXPECT_NEAR(j0 * j0, 5.7832, 1e-4);
  const auto e = solve_robin_eigen(disk(0.02), 1e6);
  EXPECT_NEAR(e.lambda, j0 * j0, 0.05);
}

TEST(SolveRobinEigen, RobinDiskMatchesBesselCondition) {
  const double k = robin_disk_k(1.0);
  const auto e = solve_robin_eigen(disk(0.02), 1.0);
  EXPECT_NEAR(e.lambda, k * k, 0.01 * k * k);
  EXPECT_DOUBLE_EQ(e.field.max(), 1.0);
  EXPECT_GT(e.field.min(), 0.0);
  const auto sys = assemble(RobinProblem{e.field.mesh_ptr(), 1.0, std::nullopt});
  EXPECT_NEAR(rayleigh_quotient(sys, 1.0, to_vector(e.field)), e.lambda, 1e-8 * e.lambda);
}

TEST(SolveRobinEigen, MonotoneInBeta) {
  const auto mesh = disk(0.1);
  double prev = 0.0;
  for (double beta : {0.1, 0.5, 1.0, 10.0, 1e3}) {
    const double l = solve_robin_eigen(mesh, beta).lambda;
    EXPECT_GT(l, prev);
    prev = l;
  }
}

TEST(SolveRobinEigen, SecondOrderConvergence) {
  const double k = robin_disk_k(1.0);
  const double e1 = std::abs(solve_robin_eigen(disk(0.1), 1.0).lambda - k * k);
  const double e2 = std::abs(solve_robin_eigen(disk(0.05), 1.0).lambda - k * k);
  EXPECT_GE(e1 / e2, 3.0);
  EXPECT_LE(e1 / e2, 5.5);
}

TEST(Integrate, PowerIntegrals) {
  const auto mesh = std::make_shared<const MeasuredMesh>(generate_domain(SquareDomain{1.0, {}}, 0.1, MetricModel::flat()));
  const auto x = interpolate(mesh, [](Point2 p) { return p.x; });
  EXPECT_NEAR(integrate_power(x, 3.0), 0.25, 1e-14);
  EXPECT_NEAR(integrate_power(x, 0.5), 2.0 / 3.0, 1e-7);
  const auto shifted = interpolate(mesh, [](Point2 p) { return p.x - 0.53; });
  // int_0^1 |x - a|^3 dx = (a^4 + (1 - a)^4) / 4
  EXPECT_NEAR(integrate_power(shifted, 3.0), (std::pow(0.53, 4) + std::pow(0.47, 4)) / 4.0, 1e-14);
  EXPECT_NEAR(integrate(x), 0.5, 1e-14);
  EXPECT_NEAR(integrate_boundary(x), 2.0, 1e-14);
}
