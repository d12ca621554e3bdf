#include "robinsym/rearrange.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "robinsym/errors.hpp"

namespace robinsym {

namespace {

double det3(const std::array<Bary, 3>& p) {
  return p[0][0] * (p[1][1] * p[2][2] - p[1][2] * p[2][1]) - p[0][1] * (p[1][0] * p[2][2] - p[1][2] * p[2][0]) +
         p[0][2] * (p[1][0] * p[2][1] - p[1][1] * p[2][0]);
}

double dot3(const Bary& b, const std::array<double, 3>& v) { return b[0] * v[0] + b[1] * v[1] + b[2] * v[2]; }

Bary compose(const std::array<Bary, 3>& outer, const Bary& inner) {
  Bary r{0.0, 0.0, 0.0};
  for (int k = 0; k < 3; ++k)
    for (int c = 0; c < 3; ++c) r[c] += inner[k] * outer[k][c];
  return r;
}

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

// Smallest x in [0, len] with q(x) = target, q decreasing there.
double solve_decreasing(const DistributionData::Quadratic& q, double target, double len) {
  const double a = q.c2, b = q.c1, c = q.c0 - target;
  double x;
  if (std::abs(a) * len * len <= 1e-15 * (std::abs(b) * len + std::abs(c))) {
    x = b != 0.0 ? -c / b : 0.0;
  } else {
    const double disc = std::max(0.0, b * b - 4.0 * a * c);
    const double qq = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    const double r1 = qq / a;
    const double r2 = qq != 0.0 ? c / qq : r1;
    const double slack = 1e-9 * len;
    const bool ok1 = r1 >= -slack && r1 <= len + slack;
    const bool ok2 = r2 >= -slack && r2 <= len + slack;
    x = ok1 && ok2 ? std::min(r1, r2) : ok1 ? r1 : r2;
  }
  x = std::clamp(x, 0.0, len);
  // safeguarded Newton polish
  double lo = 0.0, hi = len;
  for (int it = 0; it < 60; ++it) {
    const double f = q(x) - target;
    if (f > 0.0)
      lo = x;
    else
      hi = x;
    if (f == 0.0 || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, len)) break;
    const double d = q.c1 + 2.0 * q.c2 * x;
    double next = d != 0.0 ? x - f / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    x = next;
  }
  return x;
}

}  // namespace

std::vector<std::array<Bary, 3>> split_at_zero(const std::array<double, 3>& v) {
  const std::array<Bary, 3> whole{Bary{1, 0, 0}, Bary{0, 1, 0}, Bary{0, 0, 1}};
  const bool has_pos = v[0] > 0 || v[1] > 0 || v[2] > 0;
  const bool has_neg = v[0] < 0 || v[1] < 0 || v[2] < 0;
  if (!(has_pos && has_neg)) return {whole};
  int lone = -1;
  for (int k = 0; k < 3 && lone < 0; ++k) {
    const int s = sign_of(v[k]);
    if (s != 0 && sign_of(v[(k + 1) % 3]) != s && sign_of(v[(k + 2) % 3]) != s) lone = k;
  }
  const int ib = (lone + 1) % 3, ic = (lone + 2) % 3;
  const double sb = v[lone] / (v[lone] - v[ib]);
  const double sc = v[lone] / (v[lone] - v[ic]);
  Bary pl{0, 0, 0}, pb{0, 0, 0}, pc{0, 0, 0}, cb{0, 0, 0}, cc{0, 0, 0};
  pl[lone] = 1;
  pb[ib] = 1;
  pc[ic] = 1;
  cb[lone] = 1 - sb;
  cb[ib] = sb;
  cc[lone] = 1 - sc;
  cc[ic] = sc;
  std::vector<std::array<Bary, 3>> out;
  for (const auto& piece : {std::array<Bary, 3>{pl, cb, cc}, std::array<Bary, 3>{cb, pb, pc},
                            std::array<Bary, 3>{cb, pc, cc}})
    if (std::abs(det3(piece)) > 1e-15) out.push_back(piece);
  return out;
}

// ---------------------------------------------------------------- DistributionData

DistributionData::DistributionData(std::vector<double> breakpoints, std::vector<Quadratic> pieces, double total)
    : t_(std::move(breakpoints)), q_(std::move(pieces)), total_(total) {
  if (t_.empty()) throw DomainError("distribution needs at least one breakpoint");
  if (q_.size() + 1 != t_.size()) throw DomainError("distribution needs one quadratic per interval");
  for (std::size_t i = 1; i < t_.size(); ++i)
    if (!(t_[i] < t_[i - 1])) throw DomainError("breakpoints must be strictly decreasing");
  if (!(total_ >= 0.0)) throw DomainError("total measure must be >= 0");
  tail_.assign(t_.size(), 0.0);
  for (std::size_t i = 0; i + 1 < t_.size(); ++i) {
    const double d = t_[i] - t_[i + 1];
    const auto& q = q_[i];
    tail_[i + 1] = tail_[i] + d * (q.c0 + d * (q.c1 / 2.0 + d * q.c2 / 3.0));
  }
}

long DistributionData::interval_of(double t) const {
  if (t >= t_.front()) return -1;
  if (t < t_.back()) return static_cast<long>(t_.size()) - 1;
  const auto it = std::lower_bound(t_.begin(), t_.end(), t, std::greater<>());
  return static_cast<long>(it - t_.begin()) - 1;
}

double DistributionData::operator()(double t) const {
  const long i = interval_of(t);
  if (i < 0) return 0.0;
  if (i == static_cast<long>(t_.size()) - 1) return total_;
  return std::max(0.0, q_[static_cast<std::size_t>(i)](t - t_[static_cast<std::size_t>(i) + 1]));
}

double DistributionData::derivative(double t) const {
  if (std::binary_search(t_.begin(), t_.end(), t, std::greater<>())) return std::numeric_limits<double>::quiet_NaN();
  const long i = interval_of(t);
  if (i < 0 || i == static_cast<long>(t_.size()) - 1) return 0.0;
  const auto& q = q_[static_cast<std::size_t>(i)];
  return q.c1 + 2.0 * q.c2 * (t - t_[static_cast<std::size_t>(i) + 1]);
}

double DistributionData::left_limit(double t) const {
  if (t > t_.front()) return 0.0;
  if (t <= t_.back()) return total_;
  const auto it = std::lower_bound(t_.begin(), t_.end(), t, std::greater<>());
  const auto k = static_cast<std::size_t>(it - t_.begin());
  if (*it == t) return std::max(0.0, q_[k](t_[k] - t_[k + 1]));
  return (*this)(t);
}

double DistributionData::tail_integral(double t) const {
  const long i = interval_of(t);
  if (i < 0) return 0.0;
  const auto K = t_.size() - 1;
  if (static_cast<std::size_t>(i) == K) return tail_[K] + total_ * (t_[K] - t);
  const auto k = static_cast<std::size_t>(i);
  const auto& q = q_[k];
  auto anti = [&](double s) { return s * (q.c0 + s * (q.c1 / 2.0 + s * q.c2 / 3.0)); };
  return tail_[k] + anti(t_[k] - t_[k + 1]) - anti(t - t_[k + 1]);
}

std::vector<double> DistributionData::breakpoint_measures() const {
  std::vector<double> m(t_.size(), 0.0);
  for (std::size_t k = 1; k < t_.size(); ++k) m[k] = std::max(0.0, q_[k - 1].c0);
  return m;
}

double DistributionData::decreasing_rearrangement(double s) const {
  if (!(s >= -1e-12 * std::max(1.0, total_) && s <= total_ * (1.0 + 1e-12) + 1e-300))
    throw DomainError("decreasing rearrangement evaluated outside [0, total]");
  s = std::clamp(s, 0.0, total_);
  const std::size_t K = t_.size() - 1;
  // m_k = mu(t_k) is non-decreasing in k; find the last k with m_k <= s.
  std::size_t lo = 0, hi = K;
  while (lo < hi) {
    const std::size_t mid = (lo + hi + 1) / 2;
    if (std::max(0.0, q_[mid - 1].c0) <= s)
      lo = mid;
    else
      hi = mid - 1;
  }
  const std::size_t j = lo;
  if (j == K) return t_[K];
  const auto& q = q_[j];
  const double len = t_[j] - t_[j + 1];
  if (q(len) > s) return t_[j];  // jump of mu at t_j
  return t_[j + 1] + solve_decreasing(q, s, len);
}

double DistributionData::cumulative_rearrangement(double l) const {
  if (l <= 0.0) return 0.0;
  const double T = decreasing_rearrangement(l);
  return l * T + tail_integral(T);
}

std::string DistributionData::to_csv() const {
  std::string out = "t,mu\n";
  char buf[64];
  const auto m = breakpoint_measures();
  for (std::size_t k = 0; k < t_.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", t_[k], m[k]);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------- construction

DistributionData distribution_function(const ScalarField& field) {
  const MeasuredMesh& mesh = field.mesh();
  struct Piece {
    double w;
    std::array<double, 3> v;
  };
  std::vector<Piece> pieces;
  pieces.reserve(mesh.triangle_count());
  double scale = 0.0;
  for (double x : field.values()) scale = std::max(scale, std::abs(x));
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const std::array<double, 3> v{field[tri[0]], field[tri[1]], field[tri[2]]};
    const double w = mesh.chart_area(t) * mesh.centroid_density(t);
    for (const auto& sub : split_at_zero(v)) {
      Piece p{w * std::abs(det3(sub)), {}};
      for (int k = 0; k < 3; ++k) {
        const double x = std::abs(dot3(sub[k], v));
        p.v[k] = x <= 1e-15 * scale ? 0.0 : x;
      }
      std::sort(p.v.begin(), p.v.end());
      pieces.push_back(p);
    }
  }

  // deduplicated ascending breakpoints
  std::vector<double> all;
  all.reserve(3 * pieces.size());
  for (const auto& p : pieces) all.insert(all.end(), p.v.begin(), p.v.end());
  std::sort(all.begin(), all.end());
  const double tol = 1e-14 * std::max(scale, 1e-300);
  std::vector<double> u;
  for (double x : all)
    if (u.empty() || x - u.back() > tol) u.push_back(x);
  auto index_of = [&](double x) {
    return static_cast<std::size_t>(std::upper_bound(u.begin(), u.end(), x + tol) - u.begin()) - 1;
  };

  const std::size_t M = u.size() - 1;  // number of intervals
  std::vector<DistributionData::Quadratic> asc(M);
  std::vector<double> const_at(M + 1, 0.0);  // const_at[k]: weight of pieces whose minimum snaps to u_k
  double total = 0.0;
  for (const auto& p : pieces) {
    total += p.w;
    const std::size_t ia = index_of(p.v[0]), ib = index_of(p.v[1]), ic = index_of(p.v[2]);
    const double a = u[ia], b = u[ib], c = u[ic];
    const_at[ia] += p.w;
    for (std::size_t j = ia; j < ib; ++j) {
      const double d1 = (c - a) * (b - a);
      const double d = u[j] - a;
      asc[j].c0 += p.w * (1.0 - d * d / d1);
      asc[j].c1 += -2.0 * p.w * d / d1;
      asc[j].c2 += -p.w / d1;
    }
    for (std::size_t j = ib; j < ic; ++j) {
      const double d2 = (c - a) * (c - b);
      const double e = c - u[j];
      asc[j].c0 += p.w * e * e / d2;
      asc[j].c1 += -2.0 * p.w * e / d2;
      asc[j].c2 += p.w / d2;
    }
  }
  // pieces lying entirely above interval j count fully
  double above = 0.0;
  for (std::size_t j = M; j-- > 0;) {
    above += const_at[j + 1];
    asc[j].c0 += above;
  }

  std::vector<double> t(u.rbegin(), u.rend());
  std::vector<DistributionData::Quadratic> q(asc.rbegin(), asc.rend());
  return DistributionData(std::move(t), std::move(q), total);
}

DecreasingRearrangement decreasing_rearrangement(const DistributionData& dist) { return DecreasingRearrangement(dist); }

RadialProfile schwarz_rearrangement(const DistributionData& dist, const ModelSpace& space, int intervals) {
  const double total = dist.total();
  if (space.kappa() == 1 && total > max_weighted_volume(space) * (1.0 + 1e-14))
    throw OutOfRangeError("measure exceeds the model sphere; no symmetrized ball exists");
  const double R = radius_for_volume(space, total);
  const GeodesicBall ball(space, R);
  auto eval = [dist, space, total](double r) {
    return dist.decreasing_rearrangement(std::min(volume_profile(space, r), total));
  };
  std::vector<double> grid = uniform_grid(R, intervals);
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) values[i] = eval(grid[i]);
  RadialProfile prof(ball, std::move(grid), std::move(values));
  std::vector<double> kinks;
  for (double m : dist.breakpoint_measures())
    if (m > 0.0 && m < total) kinks.push_back(radius_for_volume(space, m));
  prof.set_evaluator(eval, std::move(kinks));
  return prof;
}

// ---------------------------------------------------------------- Lorentz norms

double lorentz_norm(const DistributionData& dist, const LorentzParams& params) {
  const double p = params.p, q = params.q;
  if (!(p > 0.0) || !(q > 0.0)) throw DomainError("Lorentz exponents must be > 0");
  const auto& t = dist.breakpoints();
  const auto& pieces = dist.pieces();
  const std::size_t K = t.size() - 1;

  if (params.weak()) {
    double best = std::pow(t[K], p) * dist.total();
    for (std::size_t i = 0; i < K; ++i) {
      const auto& qi = pieces[i];
      const double base = t[i + 1], len = t[i] - t[i + 1];
      auto f = [&](double s) { return std::pow(base + s, p) * std::max(0.0, qi(s)); };
      best = std::max({best, f(0.0), f(len)});
      // p q(s) + (base + s) q'(s) = 0
      const double A = p * qi.c2 + 2.0 * qi.c2;
      const double B = p * qi.c1 + qi.c1 + 2.0 * qi.c2 * base;
      const double C = p * qi.c0 + base * qi.c1;
      std::vector<double> roots;
      if (std::abs(A) > 0.0) {
        const double disc = B * B - 4.0 * A * C;
        if (disc >= 0.0) {
          roots.push_back((-B + std::sqrt(disc)) / (2.0 * A));
          roots.push_back((-B - std::sqrt(disc)) / (2.0 * A));
        }
      } else if (B != 0.0) {
        roots.push_back(-C / B);
      }
      for (double s : roots)
        if (s > 0.0 && s < len) best = std::max(best, f(s));
    }
    return best;
  }

  const double r = q / p;
  const bool polynomial = q == std::floor(q) && r == std::floor(r) && (q - 1.0) + 2.0 * r <= 39.0;
  double integral = std::pow(t[K], q) / q * std::pow(dist.total(), r);
  thread_local boost::math::quadrature::tanh_sinh<double> ts;
  double err_sum = 0.0;
  for (std::size_t i = 0; i < K; ++i) {
    const auto& qi = pieces[i];
    const double base = t[i + 1], len = t[i] - t[i + 1];
    auto f = [&](double s) { return std::pow(base + s, q - 1.0) * std::pow(std::max(0.0, qi(s)), r); };
    if (polynomial) {
      integral += boost::math::quadrature::gauss<double, 20>::integrate(f, 0.0, len);
    } else {
      double err = 0.0;
      const double val = ts.integrate(f, 0.0, len, 1e-12, &err);
      if (!std::isfinite(val)) throw DivergenceError("Lorentz integrand is not finite on interval " + std::to_string(i));
      integral += val;
      err_sum += err;
    }
  }
  if (!std::isfinite(integral) || err_sum > 1e-8 * integral)
    throw DivergenceError("Lorentz integral failed to converge");
  return std::pow(p, 1.0 / q) * std::pow(integral, 1.0 / q);
}

// ---------------------------------------------------------------- Hardy-Littlewood

std::pair<double, double> hardy_littlewood_check(const ScalarField& f1, const ScalarField& f2) {
  if (&f1.mesh() != &f2.mesh()) throw DomainError("Hardy-Littlewood fields live on different meshes");
  const MeasuredMesh& mesh = f1.mesh();
  double lhs = 0.0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const std::array<double, 3> a{f1[tri[0]], f1[tri[1]], f1[tri[2]]};
    const std::array<double, 3> b{f2[tri[0]], f2[tri[1]], f2[tri[2]]};
    const double w = mesh.chart_area(t) * mesh.centroid_density(t);
    for (const auto& p1 : split_at_zero(a)) {
      const std::array<double, 3> b1{dot3(p1[0], b), dot3(p1[1], b), dot3(p1[2], b)};
      for (const auto& p2 : split_at_zero(b1)) {
        std::array<Bary, 3> piece{compose(p1, p2[0]), compose(p1, p2[1]), compose(p1, p2[2])};
        std::array<double, 3> x{}, y{};
        for (int k = 0; k < 3; ++k) {
          x[k] = std::abs(dot3(piece[k], a));
          y[k] = std::abs(dot3(piece[k], b));
        }
        // int of a product of linear functions: A/12 (sum x_i y_i + sum x sum y)
        const double sxy = x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
        lhs += w * std::abs(det3(piece)) / 12.0 * (sxy + (x[0] + x[1] + x[2]) * (y[0] + y[1] + y[2]));
      }
    }
  }

  const DistributionData d1 = distribution_function(f1), d2 = distribution_function(f2);
  std::vector<double> cuts = d1.breakpoint_measures();
  const auto m2 = d2.breakpoint_measures();
  cuts.insert(cuts.end(), m2.begin(), m2.end());
  cuts.push_back(0.0);
  cuts.push_back(d1.total());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  thread_local boost::math::quadrature::tanh_sinh<double> ts;
  double rhs = 0.0;
  const double total = std::min(d1.total(), d2.total());
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    const double lo = cuts[i - 1], hi = std::min(cuts[i], total);
    if (!(hi > lo)) continue;
    auto g = [&](double s) { return d1.decreasing_rearrangement(s) * d2.decreasing_rearrangement(s); };
    rhs += ts.integrate(g, lo, hi, 1e-13);
  }
  return {lhs, rhs};
}

}  // namespace robinsym
