#include "robinsym/model_geometry.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <string>

#include "robinsym/errors.hpp"

namespace robinsym {

namespace {

constexpr double kPi = std::numbers::pi;

void check_radius(const ModelSpace& space, double r) {
  if (!(r >= 0.0) || !std::isfinite(r))
    throw DomainError("radius must be finite and >= 0, got " + std::to_string(r));
  if (space.kappa() == 1 && r > kPi)
    throw DomainError("radius exceeds pi on the sphere: " + std::to_string(r));
}

// int_0^r sin^m(s) ds
double sine_power_integral(int m, double r) {
  switch (m) {
    case 1:
      // 1 - cos r without cancellation
      return 2.0 * std::pow(std::sin(0.5 * r), 2);
    case 2: {
      // (2r - sin 2r) / 4; series below r = 0.25 avoids cancellation
      if (r < 0.25) {
        const double x = 2.0 * r;
        const double x2 = x * x;
        double term = x * x2 / 6.0;
        double sum = term;
        for (int k = 1; k < 12; ++k) {
          term *= -x2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
          sum += term;
        }
        return 0.25 * sum;
      }
      return 0.25 * (2.0 * r - std::sin(2.0 * r));
    }
    default: {
      if (r == 0.0) return 0.0;
      using boost::math::quadrature::gauss_kronrod;
      auto f = [m](double s) { return std::pow(std::sin(s), m); };
      return gauss_kronrod<double, 31>::integrate(f, 0.0, r, 6, 1e-13);
    }
  }
}

}  // namespace

ModelSpace::ModelSpace(int kappa, int n, double alpha) : kappa_(kappa), n_(n), alpha_(alpha) {
  if (kappa != 0 && kappa != 1) throw DomainError("kappa must be 0 or 1");
  if (n < 2) throw DomainError("dimension must be >= 2");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
  omega_n_ = std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

double ModelSpace::max_radius() const noexcept {
  return kappa_ == 0 ? std::numeric_limits<double>::infinity() : kPi;
}

GeodesicBall::GeodesicBall(ModelSpace s, double r) : space(s), radius(r) {
  if (!(r > 0.0)) throw DomainError("ball radius must be > 0");
  check_radius(space, r);
}

double GeodesicBall::weighted_volume() const { return volume_profile(space, radius); }
double GeodesicBall::volume() const { return weighted_volume() / space.alpha(); }

double sn_kappa(const ModelSpace& space, double r) {
  check_radius(space, r);
  return space.kappa() == 0 ? r : std::sin(r);
}

double volume_profile(const ModelSpace& space, double r) {
  check_radius(space, r);
  const int n = space.dimension();
  const double scale = n * space.omega_n() * space.alpha();
  if (space.kappa() == 0) return space.omega_n() * space.alpha() * std::pow(r, n);
  return scale * sine_power_integral(n - 1, r);
}

double volume_profile_derivative(const ModelSpace& space, double r) {
  return sphere_area(space, r) * space.alpha();
}

double volume_profile_second_derivative(const ModelSpace& space, double r) {
  check_radius(space, r);
  const int n = space.dimension();
  const double scale = n * space.omega_n() * space.alpha() * (n - 1);
  if (space.kappa() == 0) return scale * std::pow(r, n - 2);
  return scale * std::pow(std::sin(r), n - 2) * std::cos(r);
}

double sphere_area(const ModelSpace& space, double r) {
  const int n = space.dimension();
  return n * space.omega_n() * std::pow(sn_kappa(space, r), n - 1);
}

double max_weighted_volume(const ModelSpace& space) {
  if (space.kappa() == 0) return std::numeric_limits<double>::infinity();
  return volume_profile(space, kPi);
}

double radius_for_volume(const ModelSpace& space, double vol) {
  if (!(vol >= 0.0) || !std::isfinite(vol))
    throw DomainError("volume must be finite and >= 0");
  if (vol == 0.0) return 0.0;
  const int n = space.dimension();
  const double wa = space.omega_n() * space.alpha();
  if (space.kappa() == 0) return std::pow(vol / wa, 1.0 / n);

  const double full = volume_profile(space, kPi);
  if (vol > full * (1.0 + 1e-14))
    throw OutOfRangeError("volume " + std::to_string(vol) + " exceeds the sphere volume " +
                          std::to_string(full));
  if (vol >= full) return kPi;
  if (n == 2) {
    // 4 pi alpha sin^2(r/2) = vol
    const double s = std::sqrt(vol / (4.0 * kPi * space.alpha()));
    return 2.0 * std::asin(std::min(1.0, s));
  }

  // Newton with bisection fallback on [lo, hi]; pure bisection near r = pi
  // where I'(pi) = 0.
  double lo = 0.0, hi = kPi;
  double r = std::pow(vol / wa, 1.0 / n);  // Euclidean guess, exact as r -> 0
  if (!(r > lo && r < hi)) r = 0.5 * (lo + hi);
  const double target_tol = 2.0 * std::numeric_limits<double>::epsilon() * vol;
  for (int it = 0; it < 400; ++it) {
    const double f = volume_profile(space, r) - vol;
    if (std::abs(f) <= target_tol) return r;
    if (f > 0.0)
      hi = r;
    else
      lo = r;
    const double d = volume_profile_derivative(space, r);
    double next = r - f / d;
    const bool near_endpoint = (kPi - r) < 1e-6;
    if (near_endpoint || !(d > 0.0) || !(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo < 4.0 * std::numeric_limits<double>::epsilon() * kPi) return next;
    r = next;
  }
  throw SolverError("radius_for_volume did not converge");
}

double isoperimetric_profile(const ModelSpace& space, double l) {
  if (!(l >= 0.0) || !std::isfinite(l))
    throw DomainError("isoperimetric_profile: l must be finite and >= 0");
  if (l > max_weighted_volume(space) * (1.0 + 1e-14))
    throw DomainError("isoperimetric_profile: l exceeds the sphere volume");
  if (l == 0.0) return 0.0;
  const int n = space.dimension();
  if (space.kappa() == 0) {
    const double wa = space.omega_n() * space.alpha();
    return n * wa * std::pow(l / wa, (n - 1.0) / n);
  }
  return volume_profile_derivative(space, radius_for_volume(space, l));
}

}  // namespace robinsym
