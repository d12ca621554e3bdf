#pragma once

// Distribution functions, rearrangements and Lorentz norms of P1 fields.
//
// For a linear function on a triangle the measure of {|h| > t} is a quadratic
// in t between consecutive vertex values. With the density frozen at each
// triangle's centroid, mu(t) is exactly piecewise quadratic over the sorted
// vertex values, and everything below is computed from those quadratics.

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "robinsym/mesh.hpp"
#include "robinsym/model_geometry.hpp"
#include "robinsym/profile.hpp"

namespace robinsym {

/// mu(t) = |{|h| > t}|, right-continuous and non-increasing.
///
/// breakpoints t_0 > t_1 > ... > t_K. On [t_{i+1}, t_i) mu(t) = c0 + c1 s + c2 s^2
/// with s = t - t_{i+1}; mu = total for t < t_K and mu = 0 for t >= t_0.
class DistributionData {
public:
  struct Quadratic {
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;
    double operator()(double s) const { return c0 + s * (c1 + s * c2); }
  };

  DistributionData(std::vector<double> breakpoints, std::vector<Quadratic> pieces, double total);

  const std::vector<double>& breakpoints() const noexcept { return t_; }
  const std::vector<Quadratic>& pieces() const noexcept { return q_; }
  double total() const noexcept { return total_; }
  double max_value() const { return t_.front(); }
  double min_value() const { return t_.back(); }

  double operator()(double t) const;
  /// Analytic derivative of the local quadratic; NaN at breakpoints, where mu is not differentiable.
  double derivative(double t) const;
  /// mu just below t (differs from mu(t) only at a jump).
  double left_limit(double t) const;
  /// int_t^inf mu(tau) dtau.
  double tail_integral(double t) const;

  /// h*(s) = inf{t : mu(t) <= s} on [0, total]; h*(total) is the minimum value.
  double decreasing_rearrangement(double s) const;
  /// int_0^l h*(s) ds = l h*(l) + int_{h*(l)}^inf mu.
  double cumulative_rearrangement(double l) const;

  /// Measures mu(t_i) at the breakpoints.
  std::vector<double> breakpoint_measures() const;
  /// CSV with header "t,mu".
  std::string to_csv() const;

  /// Index i with t in [t_{i+1}, t_i), or -1 above t_0, or K below t_K.
  long interval_of(double t) const;

private:
  std::vector<double> t_;
  std::vector<Quadratic> q_;
  std::vector<double> tail_;  // tail_[i] = int_{t_i}^inf mu
  double total_;
};

DistributionData distribution_function(const ScalarField& field);

/// s -> h*(s); a thin wrapper so call sites read like the definition.
class DecreasingRearrangement {
public:
  explicit DecreasingRearrangement(DistributionData dist) : dist_(std::move(dist)) {}
  double operator()(double s) const { return dist_.decreasing_rearrangement(s); }
  double cumulative(double l) const { return dist_.cumulative_rearrangement(l); }
  double total() const noexcept { return dist_.total(); }
  const DistributionData& distribution() const noexcept { return dist_; }

private:
  DistributionData dist_;
};

DecreasingRearrangement decreasing_rearrangement(const DistributionData& dist);

/// h#(r) = h*(I(r)) on the ball with I(R) = total.
RadialProfile schwarz_rearrangement(const DistributionData& dist, const ModelSpace& space,
                                    int intervals = 4096);

struct LorentzParams {
  double p = 1.0;
  /// Use LorentzParams::infinity() for the weak-type branch.
  double q = 1.0;

  static constexpr double infinity() { return std::numeric_limits<double>::infinity(); }
  bool weak() const { return q == infinity(); }
};

/// p^{1/q} (int_0^inf t^{q-1} mu(t)^{q/p} dt)^{1/q}; for q = inf, sup_t t^p mu(t).
double lorentz_norm(const DistributionData& dist, const LorentzParams& params);

/// (int |f1 f2| dV_g, int_0^{|Omega|} f1* f2* ds).
std::pair<double, double> hardy_littlewood_check(const ScalarField& f1, const ScalarField& f2);

/// Linear pieces of a triangle on which a linear function keeps one sign.
/// Each piece is three barycentric points of the parent triangle.
std::vector<std::array<Bary, 3>> split_at_zero(const std::array<double, 3>& values);

}  // namespace robinsym
