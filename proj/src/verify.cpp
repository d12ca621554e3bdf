#include "robinsym/verify.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>

#include "robinsym/errors.hpp"

namespace robinsym {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Gauss10 = boost::math::quadrature::gauss<double, 10>;

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double mesh_h(const MeasuredMesh& mesh) { return mesh.max_edge_length(); }

void require_matched(double mesh_measure, const GeodesicBall& ball) {
  const double vol = ball.weighted_volume();
  if (std::abs(mesh_measure - vol) > 1e-6 * std::max(mesh_measure, vol))
    throw DomainError("measure mismatch: |Omega| = " + num(mesh_measure) + ", ball = " + num(vol));
}

// int_{x0}^{x1} s(xi) / u(xi) dxi with u = a + b xi, s = c + d xi, u > 0 on the interval.
double int_s_over_u(double u0, double u1, double s0, double s1, double x0, double x1) {
  const double a = u0, b = u1 - u0, c = s0, d = s1 - s0;
  if (x1 <= x0) return 0.0;
  if (std::abs(b) <= 1e-6 * std::abs(a)) {
    auto f = [&](double x) { return (c + d * x) / (a + b * x); };
    return Gauss10::integrate(f, x0, x1);
  }
  const double ux0 = a + b * x0;
  return (d / b) * (x1 - x0) + (c - a * d / b) / b * std::log1p(b * (x1 - x0) / ux0);
}

// Sub-interval of [0, 1] on a boundary edge where u > t.
bool above_interval(double u0, double u1, double t, double& x0, double& x1) {
  const bool a0 = u0 > t, a1 = u1 > t;
  if (!a0 && !a1) return false;
  if (a0 && a1) {
    x0 = 0.0;
    x1 = 1.0;
    return true;
  }
  const double xc = (t - u0) / (u1 - u0);
  if (a0) {
    x0 = 0.0;
    x1 = xc;
  } else {
    x0 = xc;
    x1 = 1.0;
  }
  return true;
}

double edge_length(const MeasuredMesh& mesh, std::size_t e) {
  const auto& ed = mesh.boundary_edges()[e];
  const Point2 a = mesh.vertices()[static_cast<std::size_t>(ed[0])];
  const Point2 b = mesh.vertices()[static_cast<std::size_t>(ed[1])];
  return std::hypot(b.x - a.x, b.y - a.y);
}

// S(l) = int_0^l f* for the problem's source.
std::function<double(double)> source_cumulative(const RobinProblem& problem) {
  if (problem.is_torsion()) return [](double l) { return l; };
  auto dist = std::make_shared<DistributionData>(distribution_function(*problem.source));
  return [dist](double l) { return dist->cumulative_rearrangement(std::min(l, dist->total())); };
}

double source_integral(const RobinProblem& problem) {
  return problem.is_torsion() ? total_measure(*problem.mesh) : integrate(*problem.source);
}

double piece_ratio(const std::array<Bary, 3>& pc) {
  return std::abs((pc[1][1] - pc[0][1]) * (pc[2][2] - pc[0][2]) - (pc[1][2] - pc[0][2]) * (pc[2][1] - pc[0][1]));
}

}  // namespace

// ---------------------------------------------------------------- reports

nlohmann::ordered_json ComparisonReport::to_json() const {
  nlohmann::ordered_json j;
  j["check_id"] = check_id;
  j["lhs"] = lhs;
  j["rhs"] = rhs;
  j["gap"] = gap;
  j["tolerance"] = tolerance;
  j["passed"] = passed;
  j["skipped"] = skipped;
  j["context"] = {{"h", context.h},     {"beta", context.beta},   {"p", context.p},
                  {"q", context.q},     {"kappa", context.kappa}, {"n", context.n},
                  {"alpha", context.alpha}};
  j["details"] = details;
  return j;
}

std::string ComparisonReport::csv_header() { return "check_id,lhs,rhs,gap,tol,passed,h,beta,p,q,kappa,n"; }

std::string ComparisonReport::csv_row() const {
  std::string row = check_id;
  for (double x : {lhs, rhs, gap, tolerance}) row += "," + num(x);
  row += passed ? ",true" : ",false";
  for (double x : {context.h, context.beta, context.p, context.q}) row += "," + num(x);
  row += "," + std::to_string(context.kappa) + "," + std::to_string(context.n);
  return row;
}

ReportContext context_for(const ModelSpace& space, double h, double beta) {
  ReportContext c;
  c.h = h;
  c.beta = beta;
  c.kappa = space.kappa();
  c.n = space.dimension();
  c.alpha = space.alpha();
  return c;
}

// ---------------------------------------------------------------- hypotheses

void require_theorem1_range(const ModelSpace& space, double p, int q) {
  if (!(p > 0.0) || !std::isfinite(p)) throw RangeError("p must be finite and > 0");
  const double n = space.dimension();
  const double slack = 1e-12;
  double bound = 0.0;
  std::string what;
  if (q == 1) {
    bound = n / (2 * n - 2);
    what = "q = 1 needs p <= n/(2n-2)";
  } else if (q == 2) {
    if (space.kappa() == 0) {
      bound = n / (3 * n - 4);
      what = "q = 2, kappa = 0 needs p <= n/(3n-4)";
    } else if (space.dimension() == 2) {
      bound = 1.0;
      what = "q = 2, kappa = 1, n = 2 needs p <= 1";
    } else {
      bound = n / (3 * n - 3);
      what = "q = 2, kappa = 1 needs p <= n/(3n-3)";
    }
  } else {
    throw RangeError("q must be 1 or 2");
  }
  if (p > bound * (1 + slack)) throw RangeError(what + " = " + num(bound) + ", got p = " + num(p));
}

void require_theorem2_range(const ModelSpace& space, double p, int q, bool pointwise) {
  if (pointwise) {
    if (space.dimension() != 2 || space.kappa() != 0)
      throw RangeError("pointwise comparison needs n = 2 and kappa = 0");
    return;
  }
  if (!(p > 0.0) || !std::isfinite(p)) throw RangeError("p must be finite and > 0");
  if (q != 1 && q != 2) throw RangeError("q must be 1 or 2");
  if (q == 2 && space.kappa() != 0) throw RangeError("q = 2 torsion comparison needs kappa = 0");
  const int n = space.dimension();
  if (n == 2) return;
  const double bound = static_cast<double>(n) / (n - 2);
  if (p > bound * (1 + 1e-12))
    throw RangeError("torsion comparison needs p <= n/(n-2) = " + num(bound) + ", got p = " + num(p));
}

// ---------------------------------------------------------------- preliminaries

ComparisonReport check_isoperimetric(const MeasuredMesh& mesh, const ModelSpace& space) {
  ComparisonReport r;
  r.check_id = "isoperimetric";
  const double h = mesh_h(mesh);
  const double vol = total_measure(mesh);
  r.lhs = boundary_measure(mesh);
  r.rhs = isoperimetric_profile(space, vol);
  r.gap = r.lhs - r.rhs;
  r.tolerance = 5 * h * r.rhs;
  r.passed = r.lhs >= r.rhs - r.tolerance;
  r.context = context_for(space, h);
  r.details["volume"] = vol;
  return r;
}

ComparisonReport check_min_comparison(const ScalarField& u, const RadialProfile& v) {
  const MeasuredMesh& mesh = u.mesh();
  require_matched(total_measure(mesh), v.ball());
  ComparisonReport r;
  r.check_id = "min-comparison";
  const double h = mesh_h(mesh);
  r.lhs = u.min();
  r.rhs = v.back();
  r.gap = r.rhs - r.lhs;
  r.tolerance = 10 * h;
  r.passed = r.lhs <= r.rhs + r.tolerance;
  r.context = context_for(v.ball().space, h);
  return r;
}

ComparisonReport check_measure_bound(const ScalarField& u, const RadialProfile& v, int samples) {
  if (samples < 1) throw DomainError("samples must be >= 1");
  const double total = total_measure(u.mesh());
  require_matched(total, v.ball());
  const DistributionData du = distribution_function(u);
  const DistributionData dv = radial_distribution(v, v.ball().space);
  ComparisonReport r;
  r.check_id = "measure-bound";
  const double vm = v.back();
  double worst = std::numeric_limits<double>::infinity();
  double worst_t = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double t = vm * k / samples;
    const double gap = dv(t) - du(t);
    if (gap < worst) {
      worst = gap;
      worst_t = t;
      r.lhs = du(t);
      r.rhs = dv(t);
    }
  }
  r.gap = worst;
  r.tolerance = 1e-9 * total;
  r.passed = worst >= -r.tolerance;
  r.context = context_for(v.ball().space, mesh_h(u.mesh()));
  r.details["worst_t"] = worst_t;
  r.details["v_min"] = vm;
  return r;
}

// ---------------------------------------------------------------- lemmas

double exterior_inverse_integral(const ScalarField& u, double t) {
  const MeasuredMesh& mesh = u.mesh();
  double sum = 0.0;
  for (std::size_t e = 0; e < mesh.boundary_edges().size(); ++e) {
    const auto& ed = mesh.boundary_edges()[e];
    const double u0 = u[static_cast<std::size_t>(ed[0])], u1 = u[static_cast<std::size_t>(ed[1])];
    double x0, x1;
    if (!above_interval(u0, u1, t, x0, x1)) continue;
    if (u0 <= 0.0 || u1 <= 0.0) throw DomainError("1/u needs u > 0 on the boundary");
    const auto [s0, s1] = mesh.boundary_density()[e];
    sum += edge_length(mesh, e) * int_s_over_u(u0, u1, s0, s1, x0, x1);
  }
  return sum;
}

double exterior_length(const ScalarField& u, double t) {
  const MeasuredMesh& mesh = u.mesh();
  double sum = 0.0;
  for (std::size_t e = 0; e < mesh.boundary_edges().size(); ++e) {
    const auto& ed = mesh.boundary_edges()[e];
    double x0, x1;
    if (!above_interval(u[static_cast<std::size_t>(ed[0])], u[static_cast<std::size_t>(ed[1])], t, x0, x1))
      continue;
    const auto [s0, s1] = mesh.boundary_density()[e];
    const double sa = s0 + (s1 - s0) * x0, sb = s0 + (s1 - s0) * x1;
    sum += edge_length(mesh, e) * (x1 - x0) * 0.5 * (sa + sb);
  }
  return sum;
}

double truncated_flux_integral(const ScalarField& u, double t) {
  const MeasuredMesh& mesh = u.mesh();
  double sum = 0.0;
  for (std::size_t e = 0; e < mesh.boundary_edges().size(); ++e) {
    const auto& ed = mesh.boundary_edges()[e];
    const double u0 = u[static_cast<std::size_t>(ed[0])], u1 = u[static_cast<std::size_t>(ed[1])];
    if (u0 <= 0.0 || u1 <= 0.0) throw DomainError("1/u needs u > 0 on the boundary");
    const auto [s0, s1] = mesh.boundary_density()[e];
    const double len = edge_length(mesh, e);
    auto lin = [](double a, double b, double x) { return a + (b - a) * x; };
    // Below t the integrand is u s / 2, a quadratic: Simpson is exact.
    auto below = [&](double x0, double x1) {
      const double xm = 0.5 * (x0 + x1);
      auto g = [&](double x) { return lin(u0, u1, x) * lin(s0, s1, x); };
      return (x1 - x0) / 6.0 * (g(x0) + 4 * g(xm) + g(x1)) * 0.5;
    };
    double x0, x1;
    if (!above_interval(u0, u1, t, x0, x1)) {
      sum += len * below(0.0, 1.0);
      continue;
    }
    sum += len * 0.5 * t * t * int_s_over_u(u0, u1, s0, s1, x0, x1);
    if (x0 > 0.0) sum += len * below(0.0, x0);
    if (x1 < 1.0) sum += len * below(x1, 1.0);
  }
  return sum;
}

std::vector<ComparisonReport> check_lemma_31(const ScalarField& u, const RobinProblem& problem,
                                             const ModelSpace& space, const std::vector<double>& t_grid) {
  problem.validate();
  const double h = mesh_h(u.mesh());
  const DistributionData d = distribution_function(u);
  const auto S = source_cumulative(problem);
  const double umax = u.max();
  std::vector<ComparisonReport> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    ComparisonReport r;
    r.check_id = "lemma3.1";
    r.context = context_for(space, h, problem.beta);
    r.details["t"] = t;
    const double mu = d(t);
    const double dmu = d.derivative(t);
    if (!(t > 0.0) || t >= umax || std::isnan(dmu)) {
      r.skipped = true;
      r.passed = true;
      r.lhs = r.rhs = r.gap = kNaN;
      r.details["reason"] = t >= umax ? "empty superlevel set" : (t > 0.0 ? "threshold at a breakpoint" : "t <= 0");
      out.push_back(std::move(r));
      continue;
    }
    const double ext = exterior_inverse_integral(u, t);
    const double G = isoperimetric_profile(space, mu);
    r.lhs = G * G;
    r.rhs = S(mu) * (-dmu + ext / problem.beta);
    r.gap = r.rhs - r.lhs;
    r.tolerance = 1e-6 * std::abs(r.rhs) + 10 * h;
    r.passed = r.lhs <= r.rhs + r.tolerance;
    r.details["mu"] = mu;
    r.details["dmu"] = dmu;
    r.details["exterior_inverse"] = ext;
    out.push_back(std::move(r));
  }
  return out;
}

ComparisonReport check_lemma_32(const ScalarField& u, const RobinProblem& problem, double t) {
  problem.validate();
  ComparisonReport r;
  r.check_id = "lemma3.2";
  const double h = mesh_h(u.mesh());
  r.lhs = truncated_flux_integral(u, t);
  r.rhs = source_integral(problem) / (2 * problem.beta);
  r.gap = r.rhs - r.lhs;
  r.tolerance = 1e-8 * std::abs(r.rhs);
  r.passed = r.lhs <= r.rhs + r.tolerance;
  r.context.h = h;
  r.context.beta = problem.beta;
  r.details["t"] = t;
  r.details["u_max"] = u.max();
  return r;
}

// ---------------------------------------------------------------- profile functions

ProfileFunctions::ProfileFunctions(const ModelSpace& space, double p, std::function<double(double)> S,
                                   double max_volume, int points)
    : space_(space), p_(p), S_(std::move(S)), lmax_(max_volume) {
  if (!(p > 0.0)) throw DomainError("p must be > 0");
  if (!(max_volume > 0.0) || max_volume > max_weighted_volume(space))
    throw DomainError("max_volume must lie in (0, max weighted volume]");
  if (points < 16) throw DomainError("points must be >= 16");
  const double e = small_volume_exponent();
  if (e <= -1.0) throw DivergenceError("F diverges at 0: w^{1/p} G^{-2} S ~ w^" + num(e));
  F_rate_ = e + 1.0;
  H_rate_ = e + 2.0 / space.dimension() + 1.0;

  const double R = radius_for_volume(space, max_volume);
  r_.resize(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) r_[static_cast<std::size_t>(i)] = R * std::pow(10.0, -8.0 * (1.0 - double(i) / (points - 1)));
  r_.back() = R;

  auto fI = [&](double r) {
    const double I = volume_profile(space_, r);
    return std::pow(I, 1.0 / p_) * S_(I) / volume_profile_derivative(space_, r);
  };
  F_.assign(r_.size(), 0.0);
  {
    const double l0 = volume_profile(space_, r_[0]);
    // Power law below the grid; the integrand in l is fI / I'.
    F_[0] = l0 * fI(r_[0]) / volume_profile_derivative(space_, r_[0]) / F_rate_;
  }
  for (std::size_t i = 1; i < r_.size(); ++i) F_[i] = F_[i - 1] + Gauss10::integrate(fI, r_[i - 1], r_[i]);

  H_.assign(r_.size(), 0.0);
  auto hI = [&](double r) {
    const double I = volume_profile(space_, r);
    return F_at_radius(r) * S_(I) / volume_profile_derivative(space_, r);
  };
  {
    const double l0 = volume_profile(space_, r_[0]);
    H_[0] = l0 * hI(r_[0]) / volume_profile_derivative(space_, r_[0]) / H_rate_;
  }
  for (std::size_t i = 1; i < r_.size(); ++i) H_[i] = H_[i - 1] + Gauss10::integrate(hI, r_[i - 1], r_[i]);
}

ProfileFunctions ProfileFunctions::torsion(const ModelSpace& space, double p, double max_volume, int points) {
  return ProfileFunctions(space, p, [](double w) { return w; }, max_volume, points);
}

double ProfileFunctions::small_volume_exponent() const noexcept {
  return 1.0 / p_ - 1.0 + 2.0 / space_.dimension();
}

double ProfileFunctions::F_at_radius(double r) const {
  if (r <= 0.0) return 0.0;
  if (r < r_[0]) return F_[0] * std::pow(volume_profile(space_, r) / volume_profile(space_, r_[0]), F_rate_);
  const auto it = std::upper_bound(r_.begin(), r_.end(), r);
  const std::size_t i = static_cast<std::size_t>(it - r_.begin()) - 1;
  if (r == r_[i]) return F_[i];
  auto fI = [&](double s) {
    const double I = volume_profile(space_, s);
    return std::pow(I, 1.0 / p_) * S_(I) / volume_profile_derivative(space_, s);
  };
  return F_[i] + Gauss10::integrate(fI, r_[i], r);
}

double ProfileFunctions::H_at_radius(double r) const {
  if (r <= 0.0) return 0.0;
  if (r < r_[0]) return H_[0] * std::pow(volume_profile(space_, r) / volume_profile(space_, r_[0]), H_rate_);
  const auto it = std::upper_bound(r_.begin(), r_.end(), r);
  const std::size_t i = static_cast<std::size_t>(it - r_.begin()) - 1;
  if (r == r_[i]) return H_[i];
  auto hI = [&](double s) {
    const double I = volume_profile(space_, s);
    return F_at_radius(s) * S_(I) / volume_profile_derivative(space_, s);
  };
  return H_[i] + Gauss10::integrate(hI, r_[i], r);
}

double ProfileFunctions::F(double l) const {
  if (l > lmax_ * (1 + 1e-12)) throw DomainError("l beyond the tabulated range");
  if (l <= 0.0) return 0.0;
  return F_at_radius(std::min(radius_for_volume(space_, l), r_.back()));
}

double ProfileFunctions::H(double l) const {
  if (l > lmax_ * (1 + 1e-12)) throw DomainError("l beyond the tabulated range");
  if (l <= 0.0) return 0.0;
  return H_at_radius(std::min(radius_for_volume(space_, l), r_.back()));
}

std::string to_string(ProfileClaim c) {
  switch (c) {
    case ProfileClaim::A: return "A";
    case ProfileClaim::B: return "B";
    case ProfileClaim::C: return "C";
    case ProfileClaim::D: return "D";
  }
  return "?";
}

ProfileClaim profile_claim_from_string(const std::string& s) {
  if (s == "A") return ProfileClaim::A;
  if (s == "B") return ProfileClaim::B;
  if (s == "C") return ProfileClaim::C;
  if (s == "D") return ProfileClaim::D;
  throw DomainError("unknown profile claim '" + s + "' (expected A, B, C or D)");
}

bool profile_claim_in_range(ProfileClaim claim, const ModelSpace& space, double p) {
  if (!(p > 0.0)) return false;
  const double n = space.dimension();
  const double eps = 1e-12;
  switch (claim) {
    case ProfileClaim::A: return p <= n / (2 * n - 2) * (1 + eps);
    case ProfileClaim::B:
      if (space.kappa() == 0) return p <= n / (3 * n - 4) * (1 + eps);
      if (space.dimension() == 2) return p <= 1.0 + eps;
      return p <= n / (3 * n - 3) * (1 + eps);
    case ProfileClaim::C: return space.dimension() == 2 || p <= n / (n - 2) * (1 + eps);
    case ProfileClaim::D:
      return space.kappa() == 0 && (space.dimension() == 2 || p <= n / (n - 2) * (1 + eps));
  }
  return false;
}

ComparisonReport check_profile_monotonicity(const ModelSpace& space, double p, ProfileClaim claim,
                                            double max_volume, int points) {
  if (!(p > 0.0)) throw DomainError("p must be > 0");
  if (points < 2) throw DomainError("points must be >= 2");
  double L = max_volume;
  if (L <= 0.0) L = space.kappa() == 0 ? 1.0 : volume_profile(space, std::numbers::pi - 1e-3);
  std::optional<ProfileFunctions> pf;
  if (claim == ProfileClaim::B || claim == ProfileClaim::D) pf.emplace(ProfileFunctions::torsion(space, p, L));

  auto g = [&](double l) {
    const double G = isoperimetric_profile(space, l);
    const double inv = 1.0 / (G * G);
    switch (claim) {
      case ProfileClaim::A: return std::pow(l, 1.0 / p) * inv;
      case ProfileClaim::B: return pf->F(l) * inv;
      case ProfileClaim::C: return std::pow(l, 1.0 / p + 1.0) * inv;
      case ProfileClaim::D: return l * pf->F(l) * inv;
    }
    return kNaN;
  };

  ComparisonReport r;
  r.check_id = "profile-monotonicity";
  r.context = context_for(space, kNaN);
  r.context.p = p;
  double prev = g(L / points);
  double worst = std::numeric_limits<double>::infinity();
  double worst_l = kNaN;
  int violations = 0;
  for (int j = 2; j <= points; ++j) {
    const double l = L * j / points;
    const double cur = g(l);
    const double rel = (cur - prev) / std::max(std::abs(prev), std::numeric_limits<double>::min());
    if (rel < worst) {
      worst = rel;
      worst_l = l;
    }
    if (rel < -1e-9) ++violations;
    prev = cur;
  }
  r.lhs = worst;
  r.rhs = 0.0;
  r.gap = worst;
  r.tolerance = 1e-9;
  r.passed = violations == 0;
  r.details["claim"] = to_string(claim);
  r.details["in_range"] = profile_claim_in_range(claim, space, p);
  r.details["max_volume"] = L;
  r.details["violations"] = violations;
  r.details["worst_l"] = worst_l;
  return r;
}

ComparisonReport check_inner_inequality(const ModelSpace& space, double p, int samples) {
  if (!(p > 0.0)) throw DomainError("p must be > 0");
  if (samples < 1) throw DomainError("samples must be >= 1");
  const double rmax = space.kappa() == 0 ? 1.0 : std::numbers::pi - 1e-3;
  ComparisonReport r;
  r.check_id = "profile-inner";
  r.context = context_for(space, kNaN);
  r.context.p = p;
  double worst = std::numeric_limits<double>::infinity();
  double worst_r = kNaN;
  for (int j = 1; j <= samples; ++j) {
    const double rr = rmax * j / samples;
    const double d1 = volume_profile_derivative(space, rr);
    const double k = 1.0 - 2.0 * p * volume_profile(space, rr) * volume_profile_second_derivative(space, rr) / (d1 * d1);
    if (k < worst) {
      worst = k;
      worst_r = rr;
    }
  }
  r.lhs = worst;
  r.rhs = 0.0;
  r.gap = worst;
  r.tolerance = 1e-9;
  r.passed = worst >= -r.tolerance;
  r.details["worst_r"] = worst_r;
  r.details["r_max"] = rmax;
  return r;
}

// ---------------------------------------------------------------- theorems

namespace {

ComparisonReport norm_comparison(const std::string& id, const ScalarField& u, const RadialProfile& v,
                                 const ModelSpace& space, double p, int q) {
  if (!(v.ball().space == space)) throw DomainError("profile ball lives in a different model space");
  const double h = mesh_h(u.mesh());
  require_matched(total_measure(u.mesh()), v.ball());
  const LorentzParams lp{q == 1 ? p : 2 * p, static_cast<double>(q)};
  ComparisonReport r;
  r.check_id = id;
  r.lhs = lorentz_norm(distribution_function(u), lp);
  // The weighted distribution alpha phi scales the unweighted norm by alpha^{1/P}.
  r.rhs = lorentz_norm(radial_distribution(v, space), lp);
  r.gap = r.rhs - r.lhs;
  r.tolerance = 5 * h * r.rhs;
  r.passed = r.lhs <= r.rhs + r.tolerance;
  r.context = context_for(space, h);
  r.context.p = p;
  r.context.q = q;
  r.details["P"] = lp.p;
  r.details["Q"] = lp.q;
  r.details["ball_norm_unweighted"] = r.rhs * std::pow(space.alpha(), -1.0 / lp.p);
  return r;
}

}  // namespace

ComparisonReport check_theorem_main1(const ScalarField& u, const RadialProfile& v, const ModelSpace& space,
                                     double p, int q) {
  require_theorem1_range(space, p, q);
  return norm_comparison("thm1.1", u, v, space, p, q);
}

ComparisonReport check_theorem_main2(const ScalarField& u, const RadialProfile& v, const RobinProblem& problem,
                                     const ModelSpace& space, double p, int q, bool pointwise) {
  if (!problem.is_torsion()) throw RangeError("torsion comparison needs f = 1");
  require_theorem2_range(space, p, q, pointwise);
  if (!pointwise) return norm_comparison("thm1.2", u, v, space, p, q);

  if (!(v.ball().space == space)) throw DomainError("profile ball lives in a different model space");
  const double h = mesh_h(u.mesh());
  require_matched(total_measure(u.mesh()), v.ball());
  const RadialProfile us = schwarz_rearrangement(distribution_function(u), space);
  ComparisonReport r;
  r.check_id = "thm1.2-pointwise";
  double worst = -std::numeric_limits<double>::infinity();
  double worst_r = 0.0;
  for (double rr : v.grid()) {
    const double diff = us(std::min(rr, us.radius())) - v(rr);
    if (diff > worst) {
      worst = diff;
      worst_r = rr;
    }
  }
  r.lhs = worst;
  r.rhs = 0.0;
  r.gap = -worst;
  r.tolerance = 10 * h;
  r.passed = worst <= r.tolerance;
  r.context = context_for(space, h, problem.beta);
  r.details["worst_r"] = worst_r;
  r.details["u_sharp_max"] = us.front();
  r.details["v_max"] = v.front();
  return r;
}

ComparisonReport check_saint_venant(const MeshPtr& mesh, const ModelSpace& space, double beta) {
  if (!(beta > 0.0)) throw DomainError("beta must be > 0");
  const PoissonSolution sol = solve_robin_poisson(RobinProblem{mesh, beta, std::nullopt});
  const double total = total_measure(*mesh);
  const GeodesicBall ball(space, radius_for_volume(space, total));
  const RadialProfile v = solve_symmetrized_poisson(ball, beta, RadialSource::constant(space, ball.radius, 1.0));
  ComparisonReport r;
  r.check_id = "saint-venant";
  const double h = mesh_h(*mesh);
  r.lhs = integrate(sol.u);
  r.rhs = space.alpha() * v.integrate_power(1.0);
  r.gap = r.rhs - r.lhs;
  r.tolerance = 5 * h * r.rhs;
  r.passed = r.lhs <= r.rhs + r.tolerance;
  r.context = context_for(space, h, beta);
  r.details["ball_radius"] = ball.radius;
  return r;
}

ComparisonReport check_bossel_daners(const MeshPtr& mesh, const ModelSpace& space, double beta) {
  if (!(beta > 0.0)) throw DomainError("beta must be > 0");
  const EigenSolution eig = solve_robin_eigen(mesh, beta);
  const double total = total_measure(*mesh);
  const GeodesicBall ball(space, radius_for_volume(space, total));
  const RadialEigen rad = solve_radial_eigen(ball, beta);
  ComparisonReport r;
  r.check_id = "bossel-daners";
  const double h = mesh_h(*mesh);
  r.lhs = eig.lambda;
  r.rhs = rad.lambda;
  r.gap = r.lhs - r.rhs;
  r.tolerance = 5 * h * r.rhs;
  r.passed = r.lhs >= r.rhs - r.tolerance;
  r.context = context_for(space, h, beta);
  r.details["ball_radius"] = ball.radius;
  return r;
}

// ---------------------------------------------------------------- Bossel functional

EigenTestFunction eigen_test_function(const ScalarField& u, double beta) {
  if (!(beta > 0.0)) throw DomainError("beta must be > 0");
  const MeasuredMesh& mesh = u.mesh();
  const std::size_t nv = mesh.vertex_count();
  std::vector<double> grad_sum(nv, 0.0), weight(nv, 0.0);
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const auto gl = barycentric_gradients(mesh, t);
    double gx = 0.0, gy = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double uk = u[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])];
      gx += uk * gl[static_cast<std::size_t>(k)].x;
      gy += uk * gl[static_cast<std::size_t>(k)].y;
    }
    const SymTensor2 gi = mesh.inverse_metric_at_centroid(t);
    const double norm = std::sqrt(std::max(0.0, gi.xx * gx * gx + 2 * gi.xy * gx * gy + gi.yy * gy * gy));
    const double w = mesh.chart_area(t) * mesh.centroid_density(t);
    for (int vtx : tri) {
      grad_sum[static_cast<std::size_t>(vtx)] += w * norm;
      weight[static_cast<std::size_t>(vtx)] += w;
    }
  }
  EigenTestFunction out{ScalarField(u.mesh_ptr(), std::vector<double>(nv, 0.0)), 0, 0.0};
  std::vector<double> phi(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    if (!(u[i] > 0.0)) throw DomainError("eigenfield must be positive for |grad u|/u");
    phi[i] = grad_sum[i] / weight[i] / u[i];
    if (mesh.is_boundary_vertex(static_cast<int>(i)) && phi[i] > beta) {
      out.max_excess = std::max(out.max_excess, phi[i] - beta);
      phi[i] = beta;
      ++out.clamped;
    }
  }
  out.phi = ScalarField(u.mesh_ptr(), std::move(phi));
  return out;
}

double bossel_functional(const ScalarField& u, const ScalarField& phi, double beta, double t) {
  const MeasuredMesh& mesh = u.mesh();
  if (&phi.mesh() != &mesh) throw DomainError("u and phi live on different meshes");
  if (std::abs(u.max() - 1.0) > 1e-9) throw DomainError("u must be normalized to max 1");
  if (!(t > u.min() && t < 1.0)) throw DomainError("t must lie in (min u, 1)");
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (phi[i] < -1e-9) throw AdmissibilityError("phi < 0 at vertex " + std::to_string(i));
    if (mesh.is_boundary_vertex(static_cast<int>(i)) && phi[i] > beta + 1e-9)
      throw AdmissibilityError("phi > beta at boundary vertex " + std::to_string(i));
  }

  double level = 0.0, area_sq = 0.0;
  for (std::size_t tr = 0; tr < mesh.triangle_count(); ++tr) {
    const auto& tri = mesh.triangles()[tr];
    std::array<double, 3> w{}, f{};
    for (std::size_t k = 0; k < 3; ++k) {
      w[k] = u[static_cast<std::size_t>(tri[k])] - t;
      f[k] = phi[static_cast<std::size_t>(tri[k])];
    }
    // Level polyline: the segment joining the two edge crossings.
    std::array<Bary, 2> cross{};
    std::array<double, 2> fc{};
    int nc = 0;
    for (std::size_t a = 0; a < 3 && nc < 2; ++a) {
      const std::size_t b = (a + 1) % 3;
      if ((w[a] > 0.0) == (w[b] > 0.0)) continue;
      const double s = w[a] / (w[a] - w[b]);
      Bary bc{0.0, 0.0, 0.0};
      bc[a] = 1.0 - s;
      bc[b] = s;
      cross[static_cast<std::size_t>(nc)] = bc;
      fc[static_cast<std::size_t>(nc)] = f[a] + s * (f[b] - f[a]);
      ++nc;
    }
    if (nc == 2) {
      const Point2 p0 = mesh.point(tr, cross[0]), p1 = mesh.point(tr, cross[1]);
      const double len = std::hypot(p1.x - p0.x, p1.y - p0.y);
      if (len > 0.0) {
        const Bary mid{0.5 * (cross[0][0] + cross[1][0]), 0.5 * (cross[0][1] + cross[1][1]),
                       0.5 * (cross[0][2] + cross[1][2])};
        const Point2 dir{(p1.x - p0.x) / len, (p1.y - p0.y) / len};
        level += len * mesh.length_density_at(tr, mid, dir) * 0.5 * (fc[0] + fc[1]);
      }
    }
    // int phi^2 over the part of the triangle with u > t.
    const double scale = mesh.chart_area(tr) * mesh.centroid_density(tr);
    for (const auto& pc : split_at_zero(w)) {
      double wc = 0.0;
      std::array<double, 3> fp{};
      for (std::size_t k = 0; k < 3; ++k) {
        fp[k] = pc[k][0] * f[0] + pc[k][1] * f[1] + pc[k][2] * f[2];
        wc += (pc[k][0] * w[0] + pc[k][1] * w[1] + pc[k][2] * w[2]) / 3.0;
      }
      if (!(wc > 0.0)) continue;
      const double sq = fp[0] * fp[0] + fp[1] * fp[1] + fp[2] * fp[2] + fp[0] * fp[1] + fp[0] * fp[2] + fp[1] * fp[2];
      area_sq += scale * piece_ratio(pc) * sq / 6.0;
    }
  }
  const double vol = distribution_function(u)(t);
  if (!(vol > 0.0)) throw DomainError("empty superlevel set");
  return (beta * exterior_length(u, t) + level - area_sq) / vol;
}

double bossel_functional_ball(const RadialProfile& log_derivative, double r) {
  const ModelSpace& space = log_derivative.ball().space;
  if (!(r > 0.0) || r > log_derivative.radius()) throw DomainError("r must lie in (0, R]");
  const int panels = 4096;
  auto g = [&](double s) {
    const double phi = -log_derivative(s);
    return phi * phi * sphere_area(space, s);
  };
  const double hh = r / panels;
  double sum = g(0.0) + g(r);
  for (int i = 1; i < panels; ++i) sum += g(i * hh) * (i % 2 ? 4.0 : 2.0);
  const double integral = sum * hh / 3.0;
  const double vol = volume_profile(space, r) / space.alpha();
  return (sphere_area(space, r) * -log_derivative(r) - integral) / vol;
}

ComparisonReport check_bossel_functional(const ScalarField& u, double lambda, double beta,
                                         const std::vector<double>& t_grid) {
  const EigenTestFunction tf = eigen_test_function(u, beta);
  const double h = mesh_h(u.mesh());
  ComparisonReport r;
  r.check_id = "bossel-functional";
  r.context.h = h;
  r.context.beta = beta;
  r.rhs = lambda;
  r.tolerance = 10 * h;
  double worst = -1.0;
  nlohmann::ordered_json values = nlohmann::ordered_json::array();
  for (double t : t_grid) {
    const double H = bossel_functional(u, tf.phi, beta, t);
    values.push_back({{"t", t}, {"H", H}});
    if (std::abs(H - lambda) > worst) {
      worst = std::abs(H - lambda);
      r.lhs = H;
    }
  }
  r.gap = worst;
  r.passed = !t_grid.empty() && worst <= r.tolerance;
  r.details["values"] = std::move(values);
  r.details["clamped"] = tf.clamped;
  r.details["max_excess"] = tf.max_excess;
  return r;
}

}  // namespace robinsym
