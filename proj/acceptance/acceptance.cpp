// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "robinsym/errors.hpp"
#include "robinsym/experiment.hpp"
#include "robinsym/fem.hpp"
#include "robinsym/mesh.hpp"
#include "robinsym/radial.hpp"
#include "robinsym/rearrange.hpp"
#include "robinsym/verify.hpp"

using namespace robinsym;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool passed = true;
  std::string note;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      note += (note.empty() ? "" : "; ") + what;
    }
  }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

MeshPtr make_mesh(const DomainSpec& d, double h, const MetricModel& m = MetricModel::flat()) {
  return std::make_shared<const MeasuredMesh>(generate_domain(d, h, m));
}

const ModelSpace kPlane(0, 2, 1.0);
const PolygonDomain kLShape{{{0, 0}, {1, 0}, {1, 0.5}, {0.5, 0.5}, {0.5, 1}, {0, 1}}};

// Unit-area square centred at the origin.
const SquareDomain kSquare{1.0, {-0.5, -0.5}};

RadialProfile symmetrized(const RobinProblem& pb, const ModelSpace& space) {
  if (pb.is_torsion()) {
    const GeodesicBall ball(space, radius_for_volume(space, total_measure(*pb.mesh)));
    return solve_symmetrized_poisson(ball, pb.beta, RadialSource::constant(space, ball.radius, 1.0));
  }
  const DistributionData df = distribution_function(*pb.source);
  const GeodesicBall ball(space, radius_for_volume(space, df.total()));
  return solve_symmetrized_poisson(ball, pb.beta, RadialSource::rearranged(df, space));
}

// Area where the linear function g > 0 on a chart triangle, by half-plane clipping.
double clipped_area(const std::array<Point2, 3>& tri, const std::array<double, 3>& g) {
  std::vector<Point2> poly;
  for (int i = 0; i < 3; ++i) {
    const Point2 a = tri[i], b = tri[(i + 1) % 3];
    const double ga = g[i], gb = g[(i + 1) % 3];
    if (ga > 0) poly.push_back(a);
    if ((ga > 0) != (gb > 0)) {
      const double s = ga / (ga - gb);
      poly.push_back({a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)});
    }
  }
  double area = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2 p = poly[i], q = poly[(i + 1) % poly.size()];
    area += p.x * q.y - q.x * p.y;
  }
  return std::abs(area) / 2.0;
}

double clipped_mu(const ScalarField& f, double t) {
  const auto& mesh = f.mesh();
  double mu = 0.0;
  for (std::size_t k = 0; k < mesh.triangle_count(); ++k) {
    const auto& tri = mesh.triangles()[k];
    const std::array<Point2, 3> p{mesh.vertices()[tri[0]], mesh.vertices()[tri[1]], mesh.vertices()[tri[2]]};
    const std::array<double, 3> up{f[tri[0]] - t, f[tri[1]] - t, f[tri[2]] - t};
    const std::array<double, 3> dn{-f[tri[0]] - t, -f[tri[1]] - t, -f[tri[2]] - t};
    mu += (clipped_area(p, up) + clipped_area(p, dn)) * mesh.centroid_density(k);
  }
  return mu;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- criteria

// Disk torsion against (1 - r^2)/4 + 1/2 at vertices and centroids.
Outcome radial_oracle() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  auto error_at = [](double h) {
    const auto mesh = make_mesh(DiskDomain{1.0, {}}, h);
    const auto u = solve_robin_poisson({mesh, 1.0, std::nullopt}).u;
    auto exact = [](Point2 p) { return (1.0 - p.x * p.x - p.y * p.y) / 4.0 + 0.5; };
    double err = 0.0;
    for (std::size_t i = 0; i < mesh->vertex_count(); ++i)
      err = std::max(err, std::abs(u[i] - exact(mesh->vertices()[i])));
    const Bary c{1.0 / 3, 1.0 / 3, 1.0 / 3};
    for (std::size_t k = 0; k < mesh->triangle_count(); ++k)
      err = std::max(err, std::abs(u.at(k, c) - exact(mesh->point(k, c))));
    return err;
  };
  const double e1 = error_at(0.02);
  const double e2 = error_at(0.01);
  const double elapsed = seconds_since(t0);
  out.require(e1 <= 5e-3, "error at h=0.02 is " + fmt(e1));
  out.require(e1 / e2 >= 3.0, "error ratio " + fmt(e1 / e2));
  out.require(elapsed < 10.0, "runtime " + fmt(elapsed) + " s");
  out.note = out.note.empty() ? "err(0.02)=" + fmt(e1) + " err(0.01)=" + fmt(e2) + " ratio=" + fmt(e1 / e2) +
                                    " time=" + fmt(elapsed) + "s"
                              : out.note;
  return out;
}

Outcome saint_venant() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  std::string gaps;
  for (double beta : {0.1, 1.0, 10.0}) {
    std::vector<double> g;
    for (double h : {0.04, 0.02, 0.01}) {
      const auto r = check_saint_venant(make_mesh(kSquare, h), kPlane, beta);
      out.require(r.passed && r.lhs < r.rhs, "beta=" + fmt(beta) + " h=" + fmt(h) + " lhs " + fmt(r.lhs) +
                                                 " !< rhs " + fmt(r.rhs));
      g.push_back(r.gap);
    }
    for (double x : g)
      out.require(x > 0 && std::abs(x - g.back()) <= 0.2 * g.back(), "beta=" + fmt(beta) + " gap unstable");
    gaps += " gap(" + fmt(beta) + ")=" + fmt(g.back());
  }
  const double elapsed = seconds_since(t0);
  out.require(elapsed < 30.0, "runtime " + fmt(elapsed) + " s");
  if (out.passed) out.note = gaps.substr(1) + " time=" + fmt(elapsed) + "s";
  return out;
}

Outcome bossel_daners() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  const auto mesh = make_mesh(kSquare, 0.025);
  const GeodesicBall ball(kPlane, radius_for_volume(kPlane, 1.0));
  for (double beta : {0.1, 1.0, 10.0, 1e3}) {
    const auto r = check_bossel_daners(mesh, kPlane, beta);
    out.require(r.passed && r.lhs >= r.rhs, "beta=" + fmt(beta) + " lhs " + fmt(r.lhs) + " rhs " + fmt(r.rhs));
    const double dl = std::abs(solve_radial_eigen(ball, beta, 4096).lambda - solve_radial_eigen(ball, beta, 8192).lambda);
    out.require(dl <= 1e-10, "beta=" + fmt(beta) + " shooting |dlambda|=" + fmt(dl));
  }
  const double lam = solve_robin_eigen(make_mesh(DiskDomain{1.0, {}}, 0.02), 1e6).lambda;
  out.require(std::abs(lam - 5.7832) <= 0.05, "beta=1e6 disk lambda " + fmt(lam));
  const double elapsed = seconds_since(t0);
  out.require(elapsed < 60.0, "runtime " + fmt(elapsed) + " s");
  if (out.passed) out.note = "disk(beta=1e6) lambda=" + fmt(lam) + " time=" + fmt(elapsed) + "s";
  return out;
}

Outcome theorem_one() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  const double h = 0.03;
  {
    const auto mesh = make_mesh(kSquare, h);
    const auto f = interpolate(mesh, [](Point2 p) { return 1.0 + std::exp(-10.0 * ((p.x - 0.2) * (p.x - 0.2) + p.y * p.y)) + p.y; });
    const RobinProblem pb{mesh, 1.0, f};
    const auto r = check_theorem_main1(solve_robin_poisson(pb).u, symmetrized(pb, kPlane), kPlane, 1.0, 1);
    out.require(r.passed, "square L^{1,1}: lhs " + fmt(r.lhs) + " rhs " + fmt(r.rhs));
    out.note = "square gap=" + fmt(r.gap);
  }
  {
    const ModelSpace sphere(1, 2, 1.0);
    const auto mesh = make_mesh(SphericalCapDomain{1.2}, h, MetricModel::sphere());
    const auto f = interpolate(mesh, [](Point2 p) { return 1.5 + std::sin(3.0 * p.x) * p.y; });
    const RobinProblem pb{mesh, 1.0, f};
    const auto r = check_theorem_main1(solve_robin_poisson(pb).u, symmetrized(pb, sphere), sphere, 0.5, 2);
    out.require(r.passed, "cap L^{1,2}: lhs " + fmt(r.lhs) + " rhs " + fmt(r.rhs));
    out.note += " cap gap=" + fmt(r.gap);
  }
  const double elapsed = seconds_since(t0);
  out.require(elapsed < 60.0, "runtime " + fmt(elapsed) + " s");
  out.note += " time=" + fmt(elapsed) + "s";
  return out;
}

Outcome pointwise() {
  Outcome out;
  const double h = 0.03;
  for (const auto& [name, dom] : {std::pair<std::string, DomainSpec>{"square", kSquare}, {"L-shape", kLShape}}) {
    const RobinProblem pb{make_mesh(dom, h), 1.0, std::nullopt};
    const auto r = check_theorem_main2(solve_robin_poisson(pb).u, symmetrized(pb, kPlane), pb, kPlane, 1.0, 1, true);
    out.require(r.passed, name + ": max(u# - v) = " + fmt(r.lhs));
  }
  std::vector<double> gaps;
  for (double h2 : {0.08, 0.04, 0.02}) {
    const RobinProblem pb{make_mesh(DiskDomain{1.0, {}}, h2), 1.0, std::nullopt};
    const auto u = solve_robin_poisson(pb).u;
    const auto v = symmetrized(pb, kPlane);
    const auto sharp = schwarz_rearrangement(distribution_function(u), kPlane);
    double g = 0.0;
    for (double r : v.grid()) g = std::max(g, std::abs(sharp(std::min(r, sharp.radius())) - v(r)));
    gaps.push_back(g);
  }
  const double order = std::log2(gaps[1] / gaps[2]);
  out.require(order >= 1.0, "disk gap order " + fmt(order));
  if (out.passed) out.note = "disk gaps " + fmt(gaps[0]) + ", " + fmt(gaps[1]) + ", " + fmt(gaps[2]) + " order=" + fmt(order);
  return out;
}

Outcome lemmas() {
  Outcome out;
  const auto mesh = make_mesh(kSquare, 0.03);
  for (bool torsion : {true, false}) {
    RobinProblem pb{mesh, 2.0, std::nullopt};
    if (!torsion) pb.source = interpolate(mesh, [](Point2 p) { return 2.0 + p.x + p.x * p.y; });
    const auto u = solve_robin_poisson(pb).u;
    const auto r = check_lemma_32(u, pb, u.max());
    const double rel = std::abs(r.lhs - r.rhs) / r.rhs;
    out.require(rel <= 1e-8, std::string(torsion ? "torsion" : "source") + " flux identity rel err " + fmt(rel));
  }
  const RobinProblem pb{mesh, 1.0, std::nullopt};
  const auto u = solve_robin_poisson(pb).u;
  const double lo = u.min(), hi = u.max();
  std::vector<double> ts;
  for (int k = 1; k <= 20; ++k) ts.push_back(lo + (hi - lo) * (k - 0.5 + 0.0173) / 20.0);
  int passed = 0, evaluated = 0;
  for (const auto& r : check_lemma_31(u, pb, kPlane, ts)) {
    if (r.skipped) continue;
    ++evaluated;
    if (r.passed) ++passed;
    else out.require(false, "threshold " + fmt(r.details.value("t", 0.0)) + " gap " + fmt(r.gap));
  }
  out.require(evaluated == 20, std::to_string(evaluated) + " of 20 thresholds evaluated");
  if (out.passed) out.note = "20/20 thresholds, flux identity exact";
  return out;
}

Outcome rearrangement() {
  Outcome out;
  const auto mesh = make_mesh(DiskDomain{1.0, {}}, 0.13, MetricModel::warped(WarpedSurfaceSpec("exp_blend", 0.5)));
  const auto f = interpolate(mesh, [](Point2 p) { return std::sin(3.0 * p.x + 1.0) * std::cos(2.0 * p.y) + 0.3 * p.x * p.y; });
  const auto d = distribution_function(f);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double t = 1.5 * (i + 0.5) / 1000.0;
    worst = std::max(worst, std::abs(d(t) - clipped_mu(f, t)) / d.total());
  }
  out.require(worst <= 1e-12, "clipping mismatch " + fmt(worst));
  const ModelSpace space(0, 2, 0.5);
  const auto sharp = schwarz_rearrangement(d, space);
  for (double p : {1.0, 2.0, 4.0}) {
    const double lhs = std::pow(integrate_power(f, p), 1.0 / p);
    const double rhs = std::pow(space.alpha(), 1.0 / p) * std::pow(sharp.integrate_power(p), 1.0 / p);
    out.require(std::abs(lhs - rhs) <= 1e-8 * lhs, "p=" + fmt(p) + " norms " + fmt(lhs) + " vs " + fmt(rhs));
  }
  const auto sq = make_mesh(kSquare, 0.1);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  double min_slack = 1e300;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> a(sq->vertex_count()), b(sq->vertex_count());
    for (auto& x : a) x = g(rng);
    for (auto& x : b) x = g(rng) + 0.5;
    const auto [lhs, rhs] = hardy_littlewood_check(ScalarField(sq, a), ScalarField(sq, b));
    min_slack = std::min(min_slack, (rhs - lhs) / rhs);
  }
  out.require(min_slack >= -1e-9, "Hardy-Littlewood slack " + fmt(min_slack));
  if (out.passed)
    out.note = std::to_string(mesh->triangle_count()) + " triangles, clip err " + fmt(worst) + ", HL slack " + fmt(min_slack);
  return out;
}

Outcome profiles() {
  Outcome out;
  struct Case {
    ProfileClaim claim;
    int kappa, n;
    double p;
  };
  const std::vector<Case> cases{
      {ProfileClaim::A, 1, 3, 0.75}, {ProfileClaim::A, 0, 3, 0.75}, {ProfileClaim::A, 1, 2, 1.0},
      {ProfileClaim::A, 0, 4, 2.0 / 3}, {ProfileClaim::B, 0, 3, 0.6}, {ProfileClaim::B, 1, 3, 0.5},
      {ProfileClaim::B, 1, 2, 1.0}, {ProfileClaim::B, 0, 2, 1.0}, {ProfileClaim::C, 0, 3, 3.0},
      {ProfileClaim::C, 1, 3, 3.0}, {ProfileClaim::C, 1, 2, 4.0}, {ProfileClaim::D, 0, 3, 3.0},
      {ProfileClaim::D, 0, 4, 2.0}, {ProfileClaim::D, 0, 2, 4.0}};
  for (const auto& c : cases) {
    const ModelSpace space(c.kappa, c.n, 1.0);
    const auto r = check_profile_monotonicity(space, c.p, c.claim, 0.0, 2048);
    out.require(r.passed, to_string(c.claim) + " kappa=" + std::to_string(c.kappa) + " n=" + std::to_string(c.n) +
                              " p=" + fmt(c.p) + " gap " + fmt(r.gap));
  }
  for (int n = 2; n <= 5; ++n) {
    const auto r = check_inner_inequality(ModelSpace(1, n, 1.0), n / (2.0 * n - 2.0));
    out.require(r.passed && r.lhs >= -1e-9, "inner inequality n=" + std::to_string(n) + " min " + fmt(r.lhs));
  }
  if (out.passed) out.note = std::to_string(cases.size()) + " endpoint cases, inner inequality n=2..5";
  return out;
}

Outcome bossel_functional_check() {
  Outcome out;
  const double h = 0.05, beta = 1.0;
  const auto mesh = make_mesh(DiskDomain{1.0, {}}, h);
  const auto eig = solve_robin_eigen(mesh, beta);
  const double lo = eig.field.min();
  std::vector<double> ts;
  for (int k = 0; k < 10; ++k) ts.push_back(lo + (1.0 - lo) * (k + 0.5) / 10.0);
  const auto r = check_bossel_functional(eig.field, eig.lambda, beta, ts);
  out.require(r.passed, "worst |H - lambda| " + fmt(r.gap) + " > " + fmt(r.tolerance));
  std::vector<double> bad(mesh->vertex_count(), 0.5);
  bad[static_cast<std::size_t>(mesh->boundary_edges()[0][0])] = beta + 0.1;
  bool rejected = false;
  try {
    bossel_functional(eig.field, ScalarField(mesh, bad), beta, ts[4]);
  } catch (const AdmissibilityError&) {
    rejected = true;
  }
  out.require(rejected, "inadmissible phi accepted");
  if (out.passed) out.note = "worst |H - lambda| = " + fmt(r.gap) + " (tol " + fmt(r.tolerance) + ")";
  return out;
}

Outcome determinism() {
  Outcome out;
  const auto cfg = ExperimentConfig::from_json(nlohmann::ordered_json::parse(R"({
    "domain": {"kind": "polygon", "points": [[0,0],[1,0],[1,0.5],[0.5,0.5],[0.5,1],[0,1]]},
    "source": {"expr": "1 + 0.5*sin(pi*x)*y"},
    "beta": [0.5, 4.0], "h": 0.06, "refine_levels": 1,
    "checks": ["isoperimetric", "min-comparison", "measure-bound", {"id": "thm1.1", "p": 1, "q": 1},
               "lemma3.1", "lemma3.2", "saint-venant", "bossel-daners", "bossel-functional"]
  })"));
  const fs::path root = fs::temp_directory_path() / "robinsym_acceptance";
  fs::remove_all(root);
  std::vector<std::string> summaries;
  for (int jobs : {1, 1, 4}) {
    RunOptions opts;
    opts.output_dir = root / std::to_string(summaries.size());
    opts.jobs = jobs;
    run_experiment(cfg, opts);
    summaries.push_back(slurp(*opts.output_dir / "summary.csv"));
  }
  out.require(!summaries[0].empty() && summaries[0] == summaries[1], "summaries differ between runs");
  out.require(summaries[0] == summaries[2], "summaries differ between 1 and 4 jobs");

  const MeasuredMesh mesh = generate_domain(SphericalCapDomain{1.0}, 0.08, MetricModel::sphere());
  save_mesh(mesh, root / "cap.json");
  const MeasuredMesh back = load_mesh(root / "cap.json");
  out.require(back.vertices() == mesh.vertices() && back.triangles() == mesh.triangles() &&
                  back.boundary_edges() == mesh.boundary_edges() && back.density() == mesh.density() &&
                  back.boundary_density() == mesh.boundary_density() && back.metric() == mesh.metric(),
              "mesh round-trip is not exact");
  out.require(mesh_to_json_text(back) == mesh_to_json_text(mesh), "mesh text differs after round-trip");
  fs::remove_all(root);
  if (out.passed) out.note = "summary byte-identical over 3 runs, mesh round-trip exact";
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"radial oracle agreement", radial_oracle},
      {"torsional rigidity comparison", saint_venant},
      {"Robin eigenvalue comparison", bossel_daners},
      {"Lorentz norm comparison", theorem_one},
      {"pointwise comparison", pointwise},
      {"level-set lemmas", lemmas},
      {"rearrangement exactness", rearrangement},
      {"profile monotonicity", profiles},
      {"Bossel functional", bossel_functional_check},
      {"determinism and round-trip", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.passed = false;
      o.note = std::string("exception: ") + e.what();
    }
    if (!o.passed) ++failures;
    std::printf("%s %2zu %s: %s\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.note.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
