#pragma once

// Symmetrized problems on geodesic balls of the model spaces, any dimension n.
//
// Radii are geodesic; A(r) = n w_n sn^{n-1}(r) is the unweighted sphere area,
// so A = I' / alpha.

#include <functional>
#include <utility>

#include "robinsym/model_geometry.hpp"
#include "robinsym/profile.hpp"
#include "robinsym/rearrange.hpp"

namespace robinsym {

/// The rearranged source f# as a function of radius, with its flux integral.
class RadialSource {
public:
  /// value(r) = f#(r); cumulative(r) = int_0^r f#(s) A(s) ds.
  RadialSource(ModelSpace space, double radius, std::function<double(double)> value,
               std::function<double(double)> cumulative);

  /// f# = c; cumulative = c I(r) / alpha.
  static RadialSource constant(const ModelSpace& space, double radius, double c);
  /// f# = f*(I(r)); cumulative = S(I(r)) / alpha with S(l) = int_0^l f*.
  static RadialSource rearranged(const DistributionData& dist, const ModelSpace& space);
  /// Samples from a non-increasing profile; cumulative by adaptive Simpson.
  static RadialSource sampled(const RadialProfile& profile);

  double operator()(double r) const { return value_(r); }
  double cumulative(double r) const { return cumulative_(r); }
  const ModelSpace& space() const noexcept { return space_; }
  double radius() const noexcept { return radius_; }

private:
  ModelSpace space_;
  double radius_;
  std::function<double(double)> value_;
  std::function<double(double)> cumulative_;
};

struct RadialOptions {
  int intervals = 4096;
  /// Relative change between Simpson doublings that ends refinement.
  double quadrature_rtol = 1e-10;
};

/// -Delta v = f# on the ball with v' + beta v = 0 at r = R. Derivatives are stored.
RadialProfile solve_symmetrized_poisson(const GeodesicBall& ball, double beta, const RadialSource& source,
                                        const RadialOptions& options = {});

/// (R^2 - r^2)/(2n) + R/(n beta): the Euclidean torsion function, exact.
RadialProfile euclidean_torsion_profile(const GeodesicBall& ball, double beta, int intervals = 4096);

struct RadialEigen {
  double lambda;
  RadialProfile profile;  // u0 with u0(0) = 1; derivatives stored
  double boundary_residual;  // u0'(R) + beta u0(R)
};

/// First Robin eigenpair of the ball by RK4 shooting and bisection on lambda.
RadialEigen solve_radial_eigen(const GeodesicBall& ball, double beta, int intervals = 4096);

/// (ln u0)' on the grid by three-point differences, one-sided at the ends unless
/// stored derivatives give the end slopes.
RadialProfile log_derivative_profile(const RadialProfile& profile);

struct LogDerivativeClaims {
  bool strictly_decreasing;
  bool below_beta;  // -v(r) < beta for r < R
  double worst_increase;  // largest v_{i+1} - v_i
  double max_minus_v;  // largest -v(r) over r < R
};

LogDerivativeClaims log_derivative_claims(const RadialProfile& log_derivative, double beta);

/// alpha phi(t) = I(v^{-1}(t)) for a non-increasing profile; quadratic in t between
/// consecutive levels, matched at both ends and at the level midpoint.
DistributionData radial_distribution(const RadialProfile& profile, const ModelSpace& space);

/// Residuals of a Poisson profile at interior grid points:
/// first = max |(A v')'/A + f#| from a five-point difference of the stored flux,
/// second = max |v'' + (A'/A) v' + f#| from second differences of the values.
std::pair<double, double> poisson_residuals(const RadialProfile& v, const RadialSource& source);

}  // namespace robinsym
