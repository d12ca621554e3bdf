#pragma once

#include <functional>
#include <string>
#include <vector>

#include "robinsym/model_geometry.hpp"

namespace robinsym {

/// A function of geodesic radius on a ball, sampled on a grid 0 = r_0 < ... < r_m = R.
///
/// Evaluation off the grid uses, in order of preference: an exact evaluator,
/// cubic Hermite interpolation when derivatives are stored, linear interpolation.
class RadialProfile {
public:
  RadialProfile(GeodesicBall ball, std::vector<double> grid, std::vector<double> values,
                std::vector<double> derivatives = {});

  const GeodesicBall& ball() const noexcept { return ball_; }
  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<double>& derivatives() const noexcept { return derivatives_; }
  bool has_derivatives() const noexcept { return !derivatives_.empty(); }

  /// Installs an exact evaluator and the radii where it fails to be smooth.
  void set_evaluator(std::function<double(double)> fn, std::vector<double> kinks = {});
  const std::vector<double>& kinks() const noexcept { return kinks_; }

  double radius() const noexcept { return ball_.radius; }
  double operator()(double r) const;
  double front() const { return values_.front(); }
  double back() const { return values_.back(); }

  bool non_increasing(double slack = 0.0) const;

  /// int_ball |v|^p dV, unweighted (no alpha factor), by Gauss-Legendre between kinks.
  double integrate_power(double p) const;

  /// CSV with header "r,value".
  std::string to_csv() const;

private:
  GeodesicBall ball_;
  std::vector<double> grid_;
  std::vector<double> values_;
  std::vector<double> derivatives_;
  std::function<double(double)> evaluator_;
  std::vector<double> kinks_;
};

/// Uniform grid of m intervals on [0, R].
std::vector<double> uniform_grid(double radius, int intervals);

}  // namespace robinsym
