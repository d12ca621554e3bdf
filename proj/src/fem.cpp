#include "robinsym/fem.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "robinsym/errors.hpp"

namespace robinsym {

namespace {

using Triplet = Eigen::Triplet<double>;

// Dunavant degree-6 rule: barycentric points and weights (weights sum to 1).
struct QuadPoint {
  Bary b;
  double w;
};

const std::vector<QuadPoint>& dunavant6() {
  static const std::vector<QuadPoint> rule = [] {
    std::vector<QuadPoint> r;
    auto sym3 = [&](double a, double w) {
      const double c = 1.0 - 2.0 * a;
      r.push_back({{a, a, c}, w});
      r.push_back({{a, c, a}, w});
      r.push_back({{c, a, a}, w});
    };
    auto sym6 = [&](double a, double b, double w) {
      const double c = 1.0 - a - b;
      for (const Bary& p : {Bary{a, b, c}, Bary{a, c, b}, Bary{b, a, c}, Bary{b, c, a}, Bary{c, a, b},
                            Bary{c, b, a}})
        r.push_back({p, w});
    };
    sym3(0.249286745170910, 0.116786275726379);
    sym3(0.063089014491502, 0.050844906370207);
    sym6(0.053145049844817, 0.310352451033784, 0.082851075618374);
    return r;
  }();
  return rule;
}

double dunavant_power(double area, double a, double b, double c, double p, int depth) {
  if (depth == 0) {
    double s = 0.0;
    for (const auto& q : dunavant6()) s += q.w * std::pow(std::abs(q.b[0] * a + q.b[1] * b + q.b[2] * c), p);
    return area * s;
  }
  const double ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
  const double qa = 0.25 * area;
  return dunavant_power(qa, a, ab, ca, p, depth - 1) + dunavant_power(qa, ab, b, bc, p, depth - 1) +
         dunavant_power(qa, ca, bc, c, p, depth - 1) + dunavant_power(qa, ab, bc, ca, p, depth - 1);
}

// Integral of |u|^p over a triangle of area `area` where u is linear with
// vertex values of one sign. Integer powers use the exact degree-6 rule;
// otherwise the tent-shaped density of u on [lo, hi] is integrated in t.
double power_integral_one_sign(double area, double a, double b, double c, double p) {
  std::array<double, 3> v{std::abs(a), std::abs(b), std::abs(c)};
  std::sort(v.begin(), v.end());
  if (p == std::floor(p) && p <= 6.0) return dunavant_power(area, v[0], v[1], v[2], p, 0);
  const double lo = v[0], mid = v[1], hi = v[2];
  if (hi - lo <= 1e-12 * hi) return area * std::pow(hi, p);
  thread_local boost::math::quadrature::tanh_sinh<double> ts;
  double s = 0.0;
  if (mid - lo > 1e-14 * hi)
    s += ts.integrate([&](double t) { return std::pow(t, p) * (t - lo); }, lo, mid) / (mid - lo);
  if (hi - mid > 1e-14 * hi)
    s += ts.integrate([&](double t) { return std::pow(t, p) * (hi - t); }, mid, hi) / (hi - mid);
  return 2.0 * area * s / (hi - lo);
}

}  // namespace

void RobinProblem::validate() const {
  if (!mesh) throw DomainError("problem has no mesh");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("beta must be finite and > 0");
  if (source) {
    if (source->mesh_ptr() != mesh && &source->mesh() != mesh.get())
      throw DomainError("source field lives on a different mesh");
    if (source->min() < 0.0) throw DomainError("source must be >= 0");
    if (!(source->max() > 0.0)) throw DomainError("source must not vanish identically");
  }
}

std::array<Point2, 3> barycentric_gradients(const MeasuredMesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangles()[t];
  const auto& v = mesh.vertices();
  const Point2 p0 = v[tri[0]], p1 = v[tri[1]], p2 = v[tri[2]];
  const double twice = 2.0 * mesh.chart_area(t);
  // grad lambda_i = rot90(opposite edge) / (2A)
  return {Point2{(p1.y - p2.y) / twice, (p2.x - p1.x) / twice},
          Point2{(p2.y - p0.y) / twice, (p0.x - p2.x) / twice},
          Point2{(p0.y - p1.y) / twice, (p1.x - p0.x) / twice}};
}

SparseMatrix assemble_stiffness(const MeasuredMesh& mesh) {
  const auto n = static_cast<Eigen::Index>(mesh.vertex_count());
  std::vector<Triplet> trip;
  trip.reserve(9 * mesh.triangle_count());
  const Bary centroid{1.0 / 3, 1.0 / 3, 1.0 / 3};
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto g = barycentric_gradients(mesh, t);
    const double area = mesh.chart_area(t);
    // In 2-D the Dirichlet integral is conformally invariant, so conformal
    // metrics use the flat form; warped charts carry sqrt(det g) g^{-1}.
    const SymTensor2 w = mesh.metric().conformal() ? SymTensor2{}
                                                   : mesh.metric().stiffness_weight(mesh.point(t, centroid));
    if (!(w.xx * w.yy - w.xy * w.xy > 1e-300)) throw GeometryError("singular metric in triangle " + std::to_string(t));
    const auto& tri = mesh.triangles()[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double wgj_x = w.xx * g[j].x + w.xy * g[j].y;
        const double wgj_y = w.xy * g[j].x + w.yy * g[j].y;
        trip.emplace_back(tri[i], tri[j], area * (g[i].x * wgj_x + g[i].y * wgj_y));
      }
  }
  SparseMatrix k(n, n);
  k.setFromTriplets(trip.begin(), trip.end());
  return k;
}

SparseMatrix assemble_mass(const MeasuredMesh& mesh) {
  const auto n = static_cast<Eigen::Index>(mesh.vertex_count());
  std::vector<Triplet> trip;
  trip.reserve(9 * mesh.triangle_count());
  const auto& rho = mesh.density();
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const double area = mesh.chart_area(t);
    const auto& tri = mesh.triangles()[t];
    // int lambda_i lambda_j lambda_k = A/10 (i=j=k), A/30 (two equal), A/60 (distinct)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double m = 0.0;
        for (int k = 0; k < 3; ++k) {
          const int distinct = (i == j) + (j == k) + (i == k);
          const double c = distinct == 3 ? 1.0 / 10 : distinct == 1 ? 1.0 / 30 : 1.0 / 60;
          m += c * rho[tri[k]];
        }
        trip.emplace_back(tri[i], tri[j], area * m);
      }
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

SparseMatrix assemble_boundary_mass(const MeasuredMesh& mesh) {
  const auto n = static_cast<Eigen::Index>(mesh.vertex_count());
  std::vector<Triplet> trip;
  trip.reserve(4 * mesh.boundary_edges().size());
  for (std::size_t e = 0; e < mesh.boundary_edges().size(); ++e) {
    const auto& ed = mesh.boundary_edges()[e];
    const Point2 a = mesh.vertices()[ed[0]], b = mesh.vertices()[ed[1]];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const double s0 = mesh.boundary_density()[e][0], s1 = mesh.boundary_density()[e][1];
    trip.emplace_back(ed[0], ed[0], len * (s0 / 4 + s1 / 12));
    trip.emplace_back(ed[1], ed[1], len * (s0 / 12 + s1 / 4));
    trip.emplace_back(ed[0], ed[1], len * (s0 + s1) / 12);
    trip.emplace_back(ed[1], ed[0], len * (s0 + s1) / 12);
  }
  SparseMatrix b(n, n);
  b.setFromTriplets(trip.begin(), trip.end());
  return b;
}

Vector to_vector(const ScalarField& f) {
  return Eigen::Map<const Vector>(f.values().data(), static_cast<Eigen::Index>(f.size()));
}

AssembledSystem assemble(const RobinProblem& problem) {
  problem.validate();
  const MeasuredMesh& mesh = *problem.mesh;
  AssembledSystem sys;
  sys.stiffness = assemble_stiffness(mesh);
  sys.mass = assemble_mass(mesh);
  sys.boundary_mass = assemble_boundary_mass(mesh);
  const Vector f = problem.source ? to_vector(*problem.source)
                                  : Vector::Ones(static_cast<Eigen::Index>(mesh.vertex_count()));
  sys.load = sys.mass * f;
  return sys;
}

PoissonSolution solve_robin_poisson(const RobinProblem& problem) {
  const AssembledSystem sys = assemble(problem);
  const SparseMatrix a = sys.stiffness + problem.beta * sys.boundary_mass;
  const auto dof = a.rows();
  const double rhs_norm = sys.load.norm();

  PoissonSolution out{ScalarField(problem.mesh, std::vector<double>(static_cast<std::size_t>(dof), 0.0)), 0, 0.0,
                      false, {}};
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
  const auto cap = static_cast<Eigen::Index>(std::ceil(50.0 * std::sqrt(static_cast<double>(dof))));
  cg.compute(a);
  // CG stops on its recursive residual, which can drift from the true one;
  // restart from the iterate with a tighter target until the true residual is met.
  Vector u = Vector::Zero(dof);
  double res = 1.0, tol = 1e-10;
  Eigen::Index used = 0;
  while (used < cap) {
    cg.setTolerance(tol);
    cg.setMaxIterations(cap - used);
    u = cg.solveWithGuess(sys.load, u);
    used += std::max<Eigen::Index>(cg.iterations(), 1);
    res = (a * u - sys.load).norm() / rhs_norm;
    if (res <= 1e-10 || cg.info() != Eigen::Success) break;
    tol *= 0.1;
  }
  out.iterations = static_cast<int>(used);
  if (!(res <= 1e-10)) {
    if (dof >= 20000) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "CG did not reach relative residual 1e-10 within %ld iterations (residual %.3g)",
                    static_cast<long>(cap), res);
      throw SolverError(buf);
    }
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
    if (ldlt.info() != Eigen::Success) throw SolverError("sparse LDL^T factorization failed");
    u = ldlt.solve(sys.load);
    res = (a * u - sys.load).norm() / rhs_norm;
    out.direct = true;
  }
  out.relative_residual = res;
  out.u = ScalarField(problem.mesh, std::vector<double>(u.data(), u.data() + dof));
  if (!(out.u.min() > 0.0))
    out.warnings.push_back("min u = " + std::to_string(out.u.min()) + " <= 0; mesh likely too coarse");
  return out;
}

double rayleigh_quotient(const AssembledSystem& sys, double beta, const Vector& x) {
  const double num = x.dot(sys.stiffness * x) + beta * x.dot(sys.boundary_mass * x);
  return num / x.dot(sys.mass * x);
}

EigenSolution solve_robin_eigen(const MeshPtr& mesh, double beta) {
  RobinProblem problem{mesh, beta, std::nullopt};
  const AssembledSystem sys = assemble(problem);
  const SparseMatrix a = sys.stiffness + beta * sys.boundary_mass;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw SolverError("sparse LDL^T factorization failed");

  Vector x = Vector::Ones(a.rows());
  double lambda = rayleigh_quotient(sys, beta, x);
  int it = 0;
  bool converged = false;
  for (; it < 2000; ++it) {
    x = ldlt.solve(sys.mass * x);
    x /= x.cwiseAbs().maxCoeff();
    const double next = rayleigh_quotient(sys, beta, x);
    // the Rayleigh quotient converges at twice the rate of the vector; require
    // the vector residual as well so the field is settled
    const Vector r = a * x - next * (sys.mass * x);
    const bool small_step = std::abs(next - lambda) <= 1e-13 * next;
    lambda = next;
    if (small_step && r.norm() <= 1e-8 * (a * x).norm()) {
      converged = true;
      ++it;
      break;
    }
  }
  if (!converged) throw SolverError("inverse iteration did not converge");
  if (x.sum() < 0.0) x = -x;
  x /= x.maxCoeff();
  // Consistent-mass P1 has no discrete maximum principle: near the Dirichlet
  // limit corner values dip below zero by far less than the interpolation error.
  // A negative lobe beyond h^2 is a real sign change.
  const double floor = -std::pow(mesh->max_edge_length(), 2);
  if (x.minCoeff() < floor) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "ground state changes sign (min %.3g below %.3g); discretization too coarse",
                  x.minCoeff(), floor);
    throw SolverError(buf);
  }
  x = x.cwiseMax(0.0);
  return {lambda, ScalarField(mesh, std::vector<double>(x.data(), x.data() + x.size())), it};
}

double integrate(const ScalarField& u) {
  const MeasuredMesh& mesh = u.mesh();
  const auto& rho = mesh.density();
  double sum = 0.0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles()[t];
    // int u rho = A/12 (sum u_i rho_i + sum_i u_i sum_j rho_j)
    double diag = 0.0, us = 0.0, rs = 0.0;
    for (int k = 0; k < 3; ++k) {
      diag += u[tri[k]] * rho[tri[k]];
      us += u[tri[k]];
      rs += rho[tri[k]];
    }
    sum += mesh.chart_area(t) / 12.0 * (diag + us * rs);
  }
  return sum;
}

double integrate_boundary(const ScalarField& u) {
  const MeasuredMesh& mesh = u.mesh();
  double sum = 0.0;
  for (std::size_t e = 0; e < mesh.boundary_edges().size(); ++e) {
    const auto& ed = mesh.boundary_edges()[e];
    const Point2 a = mesh.vertices()[ed[0]], b = mesh.vertices()[ed[1]];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const double s0 = mesh.boundary_density()[e][0], s1 = mesh.boundary_density()[e][1];
    const double u0 = u[ed[0]], u1 = u[ed[1]];
    sum += len * (u0 * (2 * s0 + s1) + u1 * (s0 + 2 * s1)) / 6.0;
  }
  return sum;
}

double integrate_power(const ScalarField& u, double p) {
  if (!(p > 0.0)) throw DomainError("integrate_power needs p > 0");
  const MeasuredMesh& mesh = u.mesh();
  double sum = 0.0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles()[t];
    std::array<double, 3> v{u[tri[0]], u[tri[1]], u[tri[2]]};
    const double area = mesh.chart_area(t);
    const double rho = mesh.centroid_density(t);
    const double lo = std::min({v[0], v[1], v[2]}), hi = std::max({v[0], v[1], v[2]});
    if (lo >= 0.0 || hi <= 0.0) {
      sum += rho * power_integral_one_sign(area, v[0], v[1], v[2], p);
      continue;
    }
    // Split at the zero line: the lone-sign vertex forms a triangle, the rest a quad.
    int lone = 0;
    for (int k = 0; k < 3; ++k) {
      const int s = (v[k] > 0) - (v[k] < 0);
      const int s1 = (v[(k + 1) % 3] > 0) - (v[(k + 1) % 3] < 0);
      const int s2 = (v[(k + 2) % 3] > 0) - (v[(k + 2) % 3] < 0);
      if (s != 0 && s1 != s && s2 != s) lone = k;
    }
    const double a = v[lone], b = v[(lone + 1) % 3], c = v[(lone + 2) % 3];
    // zero crossings along lone->b and lone->c at parameters sb, sc
    const double sb = a / (a - b), sc = a / (a - c);
    const double small = area * sb * sc;
    sum += rho * power_integral_one_sign(small, a, 0.0, 0.0, p);
    // quad (Pb0, b, c, Pc0) split into (Pb0, b, c) and (Pb0, c, Pc0); areas by barycentric determinants
    const double area1 = area * (1.0 - sb);
    const double area2 = area * sb * (1.0 - sc);
    sum += rho * power_integral_one_sign(area1, 0.0, b, c, p);
    sum += rho * power_integral_one_sign(area2, 0.0, c, 0.0, p);
  }
  return sum;
}

}  // namespace robinsym
