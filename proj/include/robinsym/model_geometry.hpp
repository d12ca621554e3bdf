#pragma once

// Model spaces (Euclidean space for kappa = 0, the round unit sphere for
// kappa = 1) in any dimension n >= 2, weighted by an isoperimetric constant
// alpha in (0, 1].
//
// All model-side volumes and boundary measures are alpha-weighted: a ball of
// radius r has weighted volume I(r) = n w_n alpha int_0^r sn^{n-1}, and
// G(l) is the weighted boundary measure of the ball of weighted volume l.

#include <numbers>

namespace robinsym {

class ModelSpace {
public:
  ModelSpace(int kappa, int n, double alpha);

  int kappa() const noexcept { return kappa_; }
  int dimension() const noexcept { return n_; }
  double alpha() const noexcept { return alpha_; }
  /// Volume of the Euclidean unit n-ball, pi^{n/2} / Gamma(n/2 + 1).
  double omega_n() const noexcept { return omega_n_; }

  /// Largest admissible geodesic radius: +inf for kappa = 0, pi for kappa = 1.
  double max_radius() const noexcept;

  bool operator==(const ModelSpace&) const = default;

private:
  int kappa_;
  int n_;
  double alpha_;
  double omega_n_;
};

struct GeodesicBall {
  ModelSpace space;
  double radius;

  GeodesicBall(ModelSpace s, double r);

  /// Weighted volume I(R); the measure matched against |Omega|_g.
  double weighted_volume() const;
  /// Unweighted model volume I(R) / alpha.
  double volume() const;
};

/// s for kappa = 0, sin s for kappa = 1.
double sn_kappa(const ModelSpace& space, double r);

/// I(r) = n w_n alpha int_0^r sn^{n-1}(s) ds.
double volume_profile(const ModelSpace& space, double r);
/// I'(r) = n w_n alpha sn^{n-1}(r).
double volume_profile_derivative(const ModelSpace& space, double r);
/// I''(r) = n w_n alpha (n-1) sn^{n-2}(r) sn'(r).
double volume_profile_second_derivative(const ModelSpace& space, double r);

/// Unweighted area of the geodesic sphere of radius r, n w_n sn^{n-1}(r).
double sphere_area(const ModelSpace& space, double r);

/// Inverse of volume_profile: |I(r) - vol| <= 1e-12 vol.
double radius_for_volume(const ModelSpace& space, double vol);

/// Isoperimetric profile G(l) = I'(I^{-1}(l)).
double isoperimetric_profile(const ModelSpace& space, double l);

/// Largest weighted volume the space can hold: +inf for kappa = 0, I(pi) for kappa = 1.
double max_weighted_volume(const ModelSpace& space);

}  // namespace robinsym
