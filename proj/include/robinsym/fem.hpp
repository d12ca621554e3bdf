#pragma once

// P1 finite elements for -Lap_g u = f in the domain, du/dN + beta u = 0 on its boundary,
// and for the first eigenpair of the same operator.

#include <Eigen/Sparse>

#include <optional>
#include <string>
#include <vector>

#include "robinsym/mesh.hpp"

namespace robinsym {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

struct RobinProblem {
  MeshPtr mesh;
  double beta = 1.0;
  /// Vertex values of f; empty means f = 1 (torsion).
  std::optional<ScalarField> source;

  /// Throws DomainError on beta <= 0 or an invalid source.
  void validate() const;
  bool is_torsion() const noexcept { return !source.has_value(); }
};

struct AssembledSystem {
  SparseMatrix stiffness;
  SparseMatrix mass;
  SparseMatrix boundary_mass;
  Vector load;
};

/// Chart gradients of the three barycentric coordinates of triangle t.
std::array<Point2, 3> barycentric_gradients(const MeasuredMesh& mesh, std::size_t t);

SparseMatrix assemble_stiffness(const MeasuredMesh& mesh);
/// Exact for the P1 density: sum_k rho_k int lambda_i lambda_j lambda_k.
SparseMatrix assemble_mass(const MeasuredMesh& mesh);
/// Exact for the linear boundary density along each edge.
SparseMatrix assemble_boundary_mass(const MeasuredMesh& mesh);

AssembledSystem assemble(const RobinProblem& problem);

struct PoissonSolution {
  ScalarField u;
  int iterations = 0;
  double relative_residual = 0.0;
  bool direct = false;
  std::vector<std::string> warnings;
};

/// Solves (K + beta B) u = M f by Jacobi-preconditioned CG to relative residual 1e-10,
/// capped at 50 sqrt(dof) iterations; systems under 2e4 dof fall back to sparse LDL^T.
PoissonSolution solve_robin_poisson(const RobinProblem& problem);

struct EigenSolution {
  double lambda = 0.0;
  /// Ground state scaled to max 1.
  ScalarField field;
  int iterations = 0;
};

/// Inverse power iteration with a single sparse LDL^T factorization.
EigenSolution solve_robin_eigen(const MeshPtr& mesh, double beta);

/// (x^T (K + beta B) x) / (x^T M x).
double rayleigh_quotient(const AssembledSystem& sys, double beta, const Vector& x);

/// int u dV_g, exact for P1 u and P1 density.
double integrate(const ScalarField& u);
/// int_{boundary} u dmu_g, exact for P1 u and linear boundary density.
double integrate_boundary(const ScalarField& u);
/// int |u|^p dV_g with the density frozen at each centroid (the convention of
/// distribution_function), by a degree-6 rule on 64 sub-triangles per element.
double integrate_power(const ScalarField& u, double p);

Vector to_vector(const ScalarField& f);

}  // namespace robinsym
