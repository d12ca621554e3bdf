#include "robinsym/profile.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "robinsym/errors.hpp"

namespace robinsym {

RadialProfile::RadialProfile(GeodesicBall ball, std::vector<double> grid, std::vector<double> values,
                             std::vector<double> derivatives)
    : ball_(ball), grid_(std::move(grid)), values_(std::move(values)), derivatives_(std::move(derivatives)) {
  if (grid_.size() < 64) throw DomainError("radial grid needs at least 64 points");
  if (values_.size() != grid_.size()) throw DomainError("radial values and grid differ in size");
  if (!derivatives_.empty() && derivatives_.size() != grid_.size())
    throw DomainError("radial derivatives and grid differ in size");
  if (grid_.front() != 0.0) throw DomainError("radial grid must start at 0");
  if (std::abs(grid_.back() - ball_.radius) > 1e-12 * ball_.radius)
    throw DomainError("radial grid must end at the ball radius");
  for (std::size_t i = 1; i < grid_.size(); ++i)
    if (!(grid_[i] > grid_[i - 1])) throw DomainError("radial grid must be strictly increasing");
  for (double v : values_)
    if (!std::isfinite(v)) throw DomainError("radial values must be finite");
}

void RadialProfile::set_evaluator(std::function<double(double)> fn, std::vector<double> kinks) {
  evaluator_ = std::move(fn);
  std::sort(kinks.begin(), kinks.end());
  kinks_.clear();
  for (double k : kinks)
    if (k > 0.0 && k < radius() && (kinks_.empty() || k > kinks_.back())) kinks_.push_back(k);
}

double RadialProfile::operator()(double r) const {
  if (!(r >= 0.0 && r <= radius() * (1.0 + 1e-14))) throw DomainError("radius outside the ball");
  if (evaluator_) return evaluator_(std::min(r, radius()));
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), r);
  if (it == grid_.end()) return values_.back();
  const std::size_t j = static_cast<std::size_t>(it - grid_.begin());
  const std::size_t i = j - 1;
  const double h = grid_[j] - grid_[i];
  const double s = (r - grid_[i]) / h;
  if (derivatives_.empty()) return (1.0 - s) * values_[i] + s * values_[j];
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  return h00 * values_[i] + h10 * h * derivatives_[i] + h01 * values_[j] + h11 * h * derivatives_[j];
}

bool RadialProfile::non_increasing(double slack) const {
  for (std::size_t i = 1; i < values_.size(); ++i)
    if (values_[i] > values_[i - 1] + slack) return false;
  return true;
}

double RadialProfile::integrate_power(double p) const {
  std::vector<double> cuts = grid_;
  cuts.insert(cuts.end(), kinks_.begin(), kinks_.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  using boost::math::quadrature::gauss;
  double sum = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    auto f = [&](double r) { return std::pow(std::abs((*this)(r)), p) * sphere_area(ball_.space, r); };
    sum += gauss<double, 10>::integrate(f, cuts[i - 1], cuts[i]);
  }
  return sum;
}

std::string RadialProfile::to_csv() const {
  std::string out = "r,value\n";
  char buf[64];
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", grid_[i], values_[i]);
    out += buf;
  }
  return out;
}

std::vector<double> uniform_grid(double radius, int intervals) {
  std::vector<double> g(static_cast<std::size_t>(intervals) + 1);
  for (int i = 0; i <= intervals; ++i) g[static_cast<std::size_t>(i)] = radius * i / intervals;
  g.back() = radius;
  return g;
}

}  // namespace robinsym
