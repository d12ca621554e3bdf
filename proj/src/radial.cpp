#include "robinsym/radial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "robinsym/errors.hpp"

namespace robinsym {

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Coefficient of u' in the radial Laplacian: (n-1) sn'/sn.
double drift(const ModelSpace& space, double r) {
  const int n1 = space.dimension() - 1;
  return space.kappa() == 0 ? n1 / r : n1 * std::cos(r) / std::sin(r);
}

}  // namespace

// ---------------------------------------------------------------- sources

RadialSource::RadialSource(ModelSpace space, double radius, std::function<double(double)> value,
                           std::function<double(double)> cumulative)
    : space_(space), radius_(radius), value_(std::move(value)), cumulative_(std::move(cumulative)) {
  if (!(radius_ > 0.0)) throw DomainError("source radius must be > 0");
  double prev = std::numeric_limits<double>::infinity();
  const int m = 512;
  for (int i = 0; i <= m; ++i) {
    const double v = value_(radius_ * i / m);
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("radial source must be finite and >= 0");
    if (v > prev * (1.0 + 1e-12) + 1e-300) throw DomainError("radial source must be non-increasing");
    prev = v;
  }
}

RadialSource RadialSource::constant(const ModelSpace& space, double radius, double c) {
  return RadialSource(
      space, radius, [c](double) { return c; },
      [space, c](double r) { return c * volume_profile(space, r) / space.alpha(); });
}

RadialSource RadialSource::rearranged(const DistributionData& dist, const ModelSpace& space) {
  const double total = dist.total();
  const double R = radius_for_volume(space, total);
  auto clamp = [space, total](double r) { return std::min(volume_profile(space, r), total); };
  return RadialSource(
      space, R, [dist, clamp](double r) { return dist.decreasing_rearrangement(clamp(r)); },
      [dist, clamp, space](double r) { return dist.cumulative_rearrangement(clamp(r)) / space.alpha(); });
}

RadialSource RadialSource::sampled(const RadialProfile& profile) {
  const ModelSpace space = profile.ball().space;
  // cumulative integrals at the grid, then Simpson on the last partial interval
  auto integrand = [profile, space](double s) { return profile(s) * sphere_area(space, s); };
  std::vector<double> cum(profile.grid().size(), 0.0);
  for (std::size_t i = 1; i < cum.size(); ++i)
    cum[i] = cum[i - 1] + simpson(integrand, profile.grid()[i - 1], profile.grid()[i], 8);
  auto cumulative = [profile, integrand, cum](double r) {
    const auto& g = profile.grid();
    const auto it = std::upper_bound(g.begin(), g.end(), r);
    const std::size_t i = static_cast<std::size_t>(it - g.begin()) - 1;
    if (i + 1 >= g.size()) return cum.back();
    return cum[i] + simpson(integrand, g[i], r, 8);
  };
  return RadialSource(space, profile.radius(), [profile](double r) { return profile(r); }, cumulative);
}

// ---------------------------------------------------------------- Poisson

RadialProfile solve_symmetrized_poisson(const GeodesicBall& ball, double beta, const RadialSource& source,
                                        const RadialOptions& options) {
  if (!(beta > 0.0)) throw DomainError("beta must be > 0");
  if (!(ball.space == source.space())) throw DomainError("source and ball live in different model spaces");
  if (std::abs(ball.radius - source.radius()) > 1e-9 * ball.radius)
    throw DomainError("source radius does not match the ball");
  const ModelSpace& space = ball.space;
  const double R = ball.radius;
  const double AR = sphere_area(space, R);
  if (!(AR > 1e-12 * sphere_area(space, 1.0))) throw GeometryError("sphere area vanishes at the ball radius; full-sphere ball is degenerate");

  // -v'(r) = cum(r) / A(r)
  auto slope = [&](double r) { return r == 0.0 ? 0.0 : source.cumulative(r) / sphere_area(space, r); };

  for (int attempt = 0, m = options.intervals; attempt < 3; ++attempt, m *= 2) {
    const std::vector<double> grid = uniform_grid(R, m);
    const double vR = source.cumulative(R) / (beta * AR);
    std::vector<double> values, prev;
    for (int panels = 2; panels <= 1024; panels *= 2) {
      values.assign(grid.size(), 0.0);
      values.back() = vR;
      for (std::size_t i = grid.size() - 1; i-- > 0;) values[i] = values[i + 1] + simpson(slope, grid[i], grid[i + 1], panels);
      if (!prev.empty()) {
        double diff = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
          diff = std::max(diff, std::abs(values[i] - prev[i]));
          scale = std::max(scale, std::abs(values[i]));
        }
        if (diff <= options.quadrature_rtol * scale) break;
        if (panels == 1024) throw SolverError("radial Simpson quadrature did not converge");
      }
      prev = values;
    }
    std::vector<double> deriv(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) deriv[i] = -slope(grid[i]);
    RadialProfile v(ball, grid, std::move(values), std::move(deriv));
    if (v.non_increasing(1e-13 * std::abs(v.front()))) return v;
  }
  throw InvariantError("profile_non_increasing", -1, "symmetrized solution increases after grid refinement");
}

RadialProfile euclidean_torsion_profile(const GeodesicBall& ball, double beta, int intervals) {
  if (ball.space.kappa() != 0) throw DomainError("closed-form torsion is Euclidean only");
  if (!(beta > 0.0)) throw DomainError("beta must be > 0");
  const double R = ball.radius;
  const int n = ball.space.dimension();
  auto v = [R, n, beta](double r) { return (R * R - r * r) / (2.0 * n) + R / (n * beta); };
  std::vector<double> grid = uniform_grid(R, intervals);
  std::vector<double> values(grid.size()), deriv(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values[i] = v(grid[i]);
    deriv[i] = -grid[i] / n;
  }
  RadialProfile p(ball, std::move(grid), std::move(values), std::move(deriv));
  p.set_evaluator(v);
  return p;
}

std::pair<double, double> poisson_residuals(const RadialProfile& v, const RadialSource& source) {
  if (!v.has_derivatives()) throw DomainError("flux residual needs stored derivatives");
  const auto& g = v.grid();
  const auto& val = v.values();
  const auto& d = v.derivatives();
  const ModelSpace& space = v.ball().space;
  const std::size_t m = g.size();
  std::vector<double> flux(m);
  for (std::size_t i = 0; i < m; ++i) flux[i] = sphere_area(space, g[i]) * d[i];
  double first = 0.0, second = 0.0;
  for (std::size_t i = 2; i + 2 < m; ++i) {
    const double h = g[i + 1] - g[i];
    const double a = sphere_area(space, g[i]);
    const double dflux = (-flux[i + 2] + 8.0 * flux[i + 1] - 8.0 * flux[i - 1] + flux[i - 2]) / (12.0 * h);
    first = std::max(first, std::abs(dflux / a + source(g[i])));
    const double d2 = (val[i + 1] - 2.0 * val[i] + val[i - 1]) / (h * h);
    second = std::max(second, std::abs(d2 + drift(space, g[i]) * d[i] + source(g[i])));
  }
  return {first, second};
}

// ---------------------------------------------------------------- eigen

namespace {

struct Shot {
  std::vector<double> r, u, du;
  bool crossed;  // u vanished somewhere or u'(R) + beta u(R) < 0
  double functional;
};

Shot shoot(const ModelSpace& space, double R, double beta, double lambda, int steps, bool keep) {
  const int n = space.dimension();
  const double eps = 1e-8 * R;
  double r = eps;
  double u = 1.0 - lambda * eps * eps / (2.0 * n);
  double du = -lambda * eps / n;
  const double h = (R - eps) / steps;
  auto rhs = [&](double rr, double uu, double dd) { return -drift(space, rr) * dd - lambda * uu; };
  Shot s{{}, {}, {}, false, 0.0};
  if (keep) {
    s.r.reserve(static_cast<std::size_t>(steps) + 1);
    s.r.push_back(0.0);
    s.u.push_back(1.0);
    s.du.push_back(0.0);
  }
  for (int k = 0; k < steps; ++k) {
    const double k1u = du, k1d = rhs(r, u, du);
    const double k2u = du + 0.5 * h * k1d, k2d = rhs(r + 0.5 * h, u + 0.5 * h * k1u, du + 0.5 * h * k1d);
    const double k3u = du + 0.5 * h * k2d, k3d = rhs(r + 0.5 * h, u + 0.5 * h * k2u, du + 0.5 * h * k2d);
    const double k4u = du + h * k3d, k4d = rhs(r + h, u + h * k3u, du + h * k3d);
    u += h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
    du += h / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d);
    r = k + 1 == steps ? R : eps + (k + 1) * h;
    if (u <= 0.0) s.crossed = true;
    if (keep) {
      s.r.push_back(r);
      s.u.push_back(u);
      s.du.push_back(du);
    }
    if (s.crossed && !keep) break;
  }
  s.functional = du + beta * u;
  if (s.functional < 0.0) s.crossed = true;
  return s;
}

}  // namespace

RadialEigen solve_radial_eigen(const GeodesicBall& ball, double beta, int intervals) {
  if (!(beta > 0.0)) throw DomainError("beta must be > 0");
  const ModelSpace& space = ball.space;
  const double R = ball.radius;
  if (space.kappa() == 1 && R >= std::numbers::pi - 1e-3)
    throw DomainError("cap radius too close to pi for the eigen ODE");

  double lo = 0.0, hi = 1.0;
  while (!shoot(space, R, beta, hi, intervals, false).crossed) {
    lo = hi;
    hi *= 2.0;
    if (hi > std::ldexp(1.0, 20)) throw SolverError("no eigenvalue bracket found in (0, 2^20]");
  }
  // bisect to machine resolution, far below the required 1e-10
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (shoot(space, R, beta, mid, intervals, false).crossed ? hi : lo) = mid;
  }
  const double lambda = 0.5 * (lo + hi);
  Shot s = shoot(space, R, beta, lambda, intervals, true);
  for (double x : s.u)
    if (!(x > 0.0)) throw SolverError("eigenfunction is not positive; shooting failed");
  const double functional = s.functional;
  RadialProfile p(ball, std::move(s.r), std::move(s.u), std::move(s.du));
  return RadialEigen{lambda, std::move(p), functional};
}

RadialProfile log_derivative_profile(const RadialProfile& profile) {
  const auto& g = profile.grid();
  const auto& u = profile.values();
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!(u[i] > 0.0)) throw DomainError("profile must be positive for its log-derivative, index " + std::to_string(i));
  const std::size_t m = g.size();
  std::vector<double> out(m);
  // three-point Lagrange derivative at x0 through (x0,y0),(x1,y1),(x2,y2)
  auto d3 = [](double x0, double x1, double x2, double y0, double y1, double y2) {
    const double a = x1 - x0, b = x2 - x0;
    return -(a + b) / (a * b) * y0 + b / (a * (b - a)) * y1 - a / (b * (b - a)) * y2;
  };
  std::vector<double> lnu(m);
  for (std::size_t i = 0; i < m; ++i) lnu[i] = std::log(u[i]);
  out[0] = d3(g[0], g[1], g[2], lnu[0], lnu[1], lnu[2]);
  out[m - 1] = d3(g[m - 1], g[m - 2], g[m - 3], lnu[m - 1], lnu[m - 2], lnu[m - 3]);
  // exact end slopes when the solver stored them
  if (profile.has_derivatives()) {
    out[0] = profile.derivatives().front() / u.front();
    out[m - 1] = profile.derivatives().back() / u.back();
  }
  for (std::size_t i = 1; i + 1 < m; ++i) {
    const double hm = g[i] - g[i - 1], hp = g[i + 1] - g[i];
    out[i] = (-hp / (hm * (hm + hp))) * lnu[i - 1] + ((hp - hm) / (hm * hp)) * lnu[i] + (hm / (hp * (hm + hp))) * lnu[i + 1];
  }
  return RadialProfile(profile.ball(), g, std::move(out));
}

LogDerivativeClaims log_derivative_claims(const RadialProfile& v, double beta) {
  LogDerivativeClaims c{true, true, -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  const auto& val = v.values();
  for (std::size_t i = 1; i < val.size(); ++i) {
    c.worst_increase = std::max(c.worst_increase, val[i] - val[i - 1]);
    if (!(val[i] < val[i - 1])) c.strictly_decreasing = false;
  }
  for (std::size_t i = 0; i + 1 < val.size(); ++i) {
    c.max_minus_v = std::max(c.max_minus_v, -val[i]);
    if (!(-val[i] < beta)) c.below_beta = false;
  }
  return c;
}

// ---------------------------------------------------------------- distribution

DistributionData radial_distribution(const RadialProfile& profile, const ModelSpace& space) {
  const auto& g = profile.grid();
  const auto& v = profile.values();
  if (!(profile.ball().space == space)) throw DomainError("profile and space differ");
  // groups of equal values: [first, last] index ranges
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0 && v[i] > v[i - 1])
      throw InvariantError("profile_non_increasing", static_cast<long>(i), "radial distribution needs a non-increasing profile");
    if (!groups.empty() && v[i] == v[groups.back().second])
      groups.back().second = i;
    else
      groups.push_back({i, i});
  }
  std::vector<double> t;
  std::vector<DistributionData::Quadratic> q;
  for (const auto& gr : groups) t.push_back(v[gr.first]);
  for (std::size_t k = 0; k + 1 < groups.size(); ++k) {
    const std::size_t ia = groups[k].second, ib = groups[k + 1].first;  // ib = ia + 1
    const double top = v[ia], bot = v[ib];
    const double len = top - bot;
    const double m0 = volume_profile(space, g[ib]);
    const double m1 = volume_profile(space, g[ia]);
    // radius where the profile crosses the mid level, by bisection on [g[ia], g[ib]]
    const double mid_level = 0.5 * (top + bot);
    double a = g[ia], b = g[ib];
    for (int it = 0; it < 100 && b - a > 1e-16 * std::max(1.0, b); ++it) {
      const double c = 0.5 * (a + b);
      (profile(c) > mid_level ? a : b) = c;
    }
    const double mh = volume_profile(space, 0.5 * (a + b));
    // through (0, m0), (len/2, mh), (len, m1)
    DistributionData::Quadratic quad;
    quad.c0 = m0;
    quad.c2 = 2.0 * (m1 - 2.0 * mh + m0) / (len * len);
    quad.c1 = (m1 - m0) / len - quad.c2 * len;
    q.push_back(quad);
  }
  return DistributionData(std::move(t), std::move(q), volume_profile(space, g.back()));
}

}  // namespace robinsym
