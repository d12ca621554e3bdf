#include "robinsym/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "robinsym/errors.hpp"
#include "robinsym/expression.hpp"
#include "robinsym/fem.hpp"
#include "robinsym/radial.hpp"
#include "robinsym/rearrange.hpp"

namespace robinsym {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [k, _] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

double get_number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + " needs '" + key + "'");
  if (!j[key].is_number()) throw ConfigError(where + "." + key + " must be a number");
  return j[key].get<double>();
}

double number_or(const json& j, const std::string& key, double fallback, const std::string& where) {
  return j.contains(key) ? get_number(j, key, where) : fallback;
}

Point2 point_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(where + " must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

bool is_mesh_check(const std::string& id) {
  for (const auto& c : check_catalog())
    if (c.id == id) return c.needs_mesh;
  throw ConfigError("unknown check id '" + id + "' (see list-checks)");
}

}  // namespace

// ---------------------------------------------------------------- catalog

const std::vector<CheckInfo>& check_catalog() {
  static const std::vector<CheckInfo> catalog = {
      {"isoperimetric", "|boundary of Omega| >= G(|Omega|)", "none", "any space", true},
      {"min-comparison", "min u <= min v on the symmetrized ball", "none", "any space", true},
      {"measure-bound", "mu_u(t) <= alpha phi(t) for t below min v", "samples (200)", "any space", true},
      {"lemma3.1", "G(mu(t))^2 <= S(mu(t)) (-mu'(t) + (1/beta) int_{boundary, u>t} 1/u)", "thresholds (20)",
       "any space", true},
      {"lemma3.2", "int_0^t tau (int_{boundary, u>=tau} 1/u) dtau <= (1/2beta) int f", "t (max u)", "any space", true},
      {"thm1.1", "||u||_{L^{P,Q}} <= alpha^{1/P} ||v||_{L^{P,Q}}, (P,Q) = (p,1) or (2p,2)", "p, q in {1,2}",
       "q=1: p <= n/(2n-2); q=2: kappa=0 p <= n/(3n-4), kappa=1 p <= n/(3n-3), kappa=1 and n=2 p <= 1", true},
      {"thm1.2", "torsion version of thm1.1", "p, q in {1,2}",
       "f = 1; q=1: p <= n/(n-2) (any p if n=2); q=2: kappa=0, p <= n/(n-2)", true},
      {"thm1.2-pointwise", "u#(r) <= v(r) at every grid radius", "none", "f = 1, n=2, kappa=0", true},
      {"saint-venant", "T(Omega) <= alpha T(ball)", "none", "any space", true},
      {"bossel-daners", "lambda(Omega) >= lambda(ball)", "none", "any space", true},
      {"bossel-functional", "H(U_t, |grad u|/u) = lambda at sampled t", "thresholds (10)", "any space", true},
      {"profile-monotonicity", "claim A: l^{1/p} G^-2, B: F G^-2, C: l^{1/p+1} G^-2, D: l F G^-2 non-decreasing",
       "p, claim, max_volume, samples (2048)",
       "A: p <= n/(2n-2); B: kappa=0 p <= n/(3n-4), kappa=1 p <= n/(3n-3), kappa=1 and n=2 p <= 1; "
       "C: p <= n/(n-2); D: kappa=0, p <= n/(n-2). Outside: reported, not refused",
       false},
      {"profile-inner", "1 - 2p I I'' / I'^2 >= 0 on (0, r_max)", "p, samples (4096)", "kappa=1: p <= n/(2n-2)",
       false},
  };
  return catalog;
}

std::string list_checks_text() {
  std::ostringstream out;
  for (const auto& c : check_catalog()) {
    out << c.id << "\n";
    out << "  statement:  " << c.statement << "\n";
    out << "  parameters: " << c.parameters << "\n";
    out << "  ranges:     " << c.ranges << "\n";
  }
  return out.str();
}

json list_checks_json() {
  json arr = json::array();
  for (const auto& c : check_catalog())
    arr.push_back({{"id", c.id},
                   {"statement", c.statement},
                   {"parameters", c.parameters},
                   {"ranges", c.ranges},
                   {"needs_mesh", c.needs_mesh}});
  return arr;
}

// ---------------------------------------------------------------- config pieces

DomainSpec domain_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw ConfigError("domain needs a string 'kind'");
  const std::string kind = j["kind"];
  if (kind == "disk") {
    require_keys(j, {"kind", "radius", "center"}, "domain");
    DiskDomain d;
    d.radius = number_or(j, "radius", 1.0, "domain");
    if (j.contains("center")) d.center = point_from_json(j["center"], "domain.center");
    return d;
  }
  if (kind == "square") {
    require_keys(j, {"kind", "side", "origin"}, "domain");
    SquareDomain d;
    d.side = number_or(j, "side", 1.0, "domain");
    if (j.contains("origin")) d.origin = point_from_json(j["origin"], "domain.origin");
    return d;
  }
  if (kind == "polygon") {
    require_keys(j, {"kind", "points"}, "domain");
    if (!j.contains("points") || !j["points"].is_array()) throw ConfigError("polygon domain needs 'points'");
    PolygonDomain d;
    for (const auto& p : j["points"]) d.points.push_back(point_from_json(p, "domain.points"));
    return d;
  }
  if (kind == "spherical_cap") {
    require_keys(j, {"kind", "theta"}, "domain");
    return SphericalCapDomain{number_or(j, "theta", std::numbers::pi / 2, "domain")};
  }
  if (kind == "annulus_sector") {
    require_keys(j, {"kind", "r_inner", "r_outer", "theta0", "theta1"}, "domain");
    AnnulusSectorDomain d;
    d.r_inner = number_or(j, "r_inner", d.r_inner, "domain");
    d.r_outer = number_or(j, "r_outer", d.r_outer, "domain");
    d.theta0 = number_or(j, "theta0", d.theta0, "domain");
    d.theta1 = number_or(j, "theta1", d.theta1, "domain");
    return d;
  }
  throw ConfigError("unknown domain kind '" + kind + "'");
}

json domain_to_json(const DomainSpec& spec) {
  return std::visit(
      [](const auto& d) -> json {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, DiskDomain>) {
          return {{"kind", "disk"}, {"radius", d.radius}, {"center", {d.center.x, d.center.y}}};
        } else if constexpr (std::is_same_v<T, SquareDomain>) {
          return {{"kind", "square"}, {"side", d.side}, {"origin", {d.origin.x, d.origin.y}}};
        } else if constexpr (std::is_same_v<T, PolygonDomain>) {
          json pts = json::array();
          for (const auto& p : d.points) pts.push_back({p.x, p.y});
          return {{"kind", "polygon"}, {"points", pts}};
        } else if constexpr (std::is_same_v<T, SphericalCapDomain>) {
          return {{"kind", "spherical_cap"}, {"theta", d.theta}};
        } else {
          return {{"kind", "annulus_sector"},
                  {"r_inner", d.r_inner},
                  {"r_outer", d.r_outer},
                  {"theta0", d.theta0},
                  {"theta1", d.theta1}};
        }
      },
      spec);
}

MetricModel metric_from_json(const json& j) {
  if (j.is_string()) {
    const std::string s = j;
    if (s == "flat") return MetricModel::flat();
    if (s == "sphere") return MetricModel::sphere();
    throw ConfigError("unknown metric '" + s + "' (flat, sphere or {\"warped\": name, \"param\": c})");
  }
  require_keys(j, {"warped", "param"}, "metric");
  if (!j.contains("warped") || !j["warped"].is_string()) throw ConfigError("metric.warped must name a profile");
  try {
    return MetricModel::warped(WarpedSurfaceSpec(j["warped"].get<std::string>(), get_number(j, "param", "metric")));
  } catch (const DomainError& e) {
    throw ConfigError(std::string("metric: ") + e.what());
  }
}

json metric_to_json(const MetricModel& m) {
  switch (m.kind()) {
    case GeometryKind::flat: return "flat";
    case GeometryKind::sphere_stereographic: return "sphere";
    case GeometryKind::warped: return {{"warped", m.warp()->name()}, {"param", m.warp()->param()}};
  }
  return "flat";
}

ModelSpace space_for_metric(const MetricModel& m) {
  switch (m.kind()) {
    case GeometryKind::flat: return ModelSpace(0, 2, 1.0);
    case GeometryKind::sphere_stereographic: return ModelSpace(1, 2, 1.0);
    case GeometryKind::warped: return ModelSpace(0, 2, m.warp()->avr());
  }
  return ModelSpace(0, 2, 1.0);
}

// ---------------------------------------------------------------- config

bool ExperimentConfig::needs_mesh() const {
  return std::any_of(checks.begin(), checks.end(), [](const CheckSpec& c) { return is_mesh_check(c.id); });
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const fs::path& base_dir) {
  try {
    require_keys(j, {"space", "metric", "domain", "source", "beta", "checks", "h", "refine_levels", "output_dir"},
                 "config");
    ExperimentConfig c;
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };

    // Geometry.
    bool metric_given = j.contains("metric");
    if (metric_given) c.metric = metric_from_json(j["metric"]);
    if (j.contains("domain")) {
      const json& d = j["domain"];
      if (d.is_object() && d.contains("mesh")) {
        require_keys(d, {"mesh"}, "domain");
        if (metric_given) throw ConfigError("a mesh file carries its own metric; drop 'metric'");
        c.mesh_file = resolve(d["mesh"].get<std::string>());
        try {
          c.metric = load_mesh(*c.mesh_file).metric();
        } catch (const Error& e) {
          throw ConfigError("mesh file " + c.mesh_file->string() + ": " + e.what());
        }
      } else {
        c.domain = domain_from_json(d);
        if (std::holds_alternative<SphericalCapDomain>(*c.domain)) {
          if (metric_given && c.metric.kind() != GeometryKind::sphere_stereographic)
            throw ConfigError("a spherical cap lives on the sphere metric");
          c.metric = MetricModel::sphere();
        }
      }
    }

    // Source.
    if (j.contains("source")) {
      const json& s = j["source"];
      if (s.is_string()) {
        if (s.get<std::string>() != "torsion") throw ConfigError("source must be \"torsion\", {\"expr\"} or {\"field\"}");
      } else {
        require_keys(s, {"expr", "field"}, "source");
        if (s.contains("expr") == s.contains("field")) throw ConfigError("source needs exactly one of expr, field");
        if (s.contains("expr")) {
          c.source.kind = SourceConfig::Kind::expr;
          c.source.expr = s["expr"].get<std::string>();
          try {
            (void)Expression::parse(c.source.expr);
          } catch (const ParseError& e) {
            throw ConfigError(std::string("source: ") + e.what());
          }
        } else {
          c.source.kind = SourceConfig::Kind::field;
          c.source.field = resolve(s["field"].get<std::string>());
        }
      }
    }

    // Scalars.
    if (j.contains("beta")) {
      c.beta.clear();
      if (j["beta"].is_number()) c.beta.push_back(j["beta"].get<double>());
      else if (j["beta"].is_array())
        for (const auto& b : j["beta"]) {
          if (!b.is_number()) throw ConfigError("beta entries must be numbers");
          c.beta.push_back(b.get<double>());
        }
      else throw ConfigError("beta must be a number or a list");
    }
    if (c.beta.empty()) throw ConfigError("beta list is empty");
    for (double b : c.beta)
      if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("beta must be finite and > 0, got " + num(b));
    c.h = number_or(j, "h", c.h, "config");
    if (!(c.h > 0.0)) throw ConfigError("h must be > 0");
    if (j.contains("refine_levels")) {
      if (!j["refine_levels"].is_number_integer()) throw ConfigError("refine_levels must be an integer");
      c.refine_levels = j["refine_levels"].get<int>();
    }
    if (c.refine_levels < 0 || c.refine_levels > 6) throw ConfigError("refine_levels must lie in [0, 6]");
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();

    // Space.
    const bool space_given = j.contains("space");
    if (space_given) {
      const json& s = j["space"];
      require_keys(s, {"kappa", "n", "alpha"}, "space");
      const double kappa = number_or(s, "kappa", 0, "space");
      const double n = number_or(s, "n", 2, "space");
      if (kappa != 0 && kappa != 1) throw ConfigError("space.kappa must be 0 or 1");
      if (n != std::floor(n) || n < 2) throw ConfigError("space.n must be an integer >= 2");
      try {
        c.space = ModelSpace(static_cast<int>(kappa), static_cast<int>(n), number_or(s, "alpha", 1.0, "space"));
      } catch (const DomainError& e) {
        throw ConfigError(std::string("space: ") + e.what());
      }
    } else {
      c.space = space_for_metric(c.metric);
    }

    // Checks; ranges first so a refused exponent is what gets reported.
    if (!j.contains("checks") || !j["checks"].is_array() || j["checks"].empty())
      throw ConfigError("config needs a non-empty 'checks' list");
    for (const auto& cj : j["checks"]) {
      CheckSpec cs;
      if (cj.is_string()) {
        cs.id = cj.get<std::string>();
      } else {
        require_keys(cj, {"id", "p", "q", "claim", "thresholds", "t", "max_volume", "samples"}, "check");
        if (!cj.contains("id") || !cj["id"].is_string()) throw ConfigError("check needs a string 'id'");
        cs.id = cj["id"];
        cs.p = number_or(cj, "p", kNaN, "check " + cs.id);
        if (cj.contains("q")) {
          if (!cj["q"].is_number_integer()) throw ConfigError("check " + cs.id + ": q must be 1 or 2");
          cs.q = cj["q"].get<int>();
        }
        if (cj.contains("claim")) {
          try {
            cs.claim = profile_claim_from_string(cj["claim"].get<std::string>());
          } catch (const DomainError& e) {
            throw ConfigError(e.what());
          }
        }
        cs.thresholds = static_cast<int>(number_or(cj, "thresholds", 0, "check " + cs.id));
        if (cj.contains("t") && !(cj["t"].is_string() && cj["t"] == "max"))
          cs.t = get_number(cj, "t", "check " + cs.id);
        cs.max_volume = number_or(cj, "max_volume", 0.0, "check " + cs.id);
        cs.samples = static_cast<int>(number_or(cj, "samples", 0, "check " + cs.id));
      }
      (void)is_mesh_check(cs.id);
      if (cs.thresholds < 0 || cs.samples < 0) throw ConfigError("check " + cs.id + ": counts must be >= 0");
      const bool torsion = c.source.kind == SourceConfig::Kind::torsion;
      try {
        if (cs.id == "thm1.1") {
          require_theorem1_range(c.space, cs.p, cs.q);
        } else if (cs.id == "thm1.2" || cs.id == "thm1.2-pointwise") {
          require_theorem2_range(c.space, cs.p, cs.q, cs.id == "thm1.2-pointwise");
          if (!torsion) throw RangeError(cs.id + " needs the torsion source f = 1");
        } else if (cs.id == "profile-monotonicity" || cs.id == "profile-inner") {
          if (!(cs.p > 0.0)) throw RangeError(cs.id + " needs p > 0");
        }
      } catch (const RangeError& e) {
        throw ConfigError("range: check " + cs.id + ": " + e.what());
      }
      c.checks.push_back(cs);
    }

    if (c.needs_mesh()) {
      if (!c.domain && !c.mesh_file) throw ConfigError("mesh checks need a 'domain'");
      const ModelSpace expected = space_for_metric(c.metric);
      if (space_given && !(c.space == expected))
        throw ConfigError("space (kappa=" + std::to_string(c.space.kappa()) + ", n=" +
                          std::to_string(c.space.dimension()) + ", alpha=" + num(c.space.alpha()) +
                          ") does not match the metric, which compares against (kappa=" +
                          std::to_string(expected.kappa()) + ", n=2, alpha=" + num(expected.alpha()) + ")");
      if (c.mesh_file && c.refine_levels > 0) throw ConfigError("a mesh file cannot be refined; use refine_levels 0");
    }
    if (c.source.kind == SourceConfig::Kind::field && !c.mesh_file)
      throw ConfigError("a field source needs a mesh file domain");
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config JSON: ") + e.what());
  }
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config JSON: ") + e.what());
  }
  return from_json(j, path.parent_path());
}

json ExperimentConfig::to_json() const {
  json j;
  j["space"] = {{"kappa", space.kappa()}, {"n", space.dimension()}, {"alpha", space.alpha()}};
  j["metric"] = metric_to_json(metric);
  if (mesh_file) j["domain"] = {{"mesh", mesh_file->string()}};
  else if (domain) j["domain"] = domain_to_json(*domain);
  switch (source.kind) {
    case SourceConfig::Kind::torsion: j["source"] = "torsion"; break;
    case SourceConfig::Kind::expr: j["source"] = {{"expr", source.expr}}; break;
    case SourceConfig::Kind::field: j["source"] = {{"field", source.field.string()}}; break;
  }
  j["beta"] = beta;
  json cs = json::array();
  for (const auto& c : checks) {
    json cj{{"id", c.id}};
    if (!std::isnan(c.p)) cj["p"] = c.p;
    if (c.id == "thm1.1" || c.id == "thm1.2") cj["q"] = c.q;
    if (c.id == "profile-monotonicity") {
      cj["claim"] = to_string(c.claim);
      cj["max_volume"] = c.max_volume;
    }
    if (c.id == "lemma3.1") cj["thresholds"] = c.thresholds > 0 ? c.thresholds : 20;
    if (c.id == "bossel-functional") cj["thresholds"] = c.thresholds > 0 ? c.thresholds : 10;
    if (c.id == "lemma3.2") cj["t"] = c.t ? json(*c.t) : json("max");
    if (c.id == "measure-bound") cj["samples"] = c.samples > 0 ? c.samples : 200;
    if (c.id == "profile-monotonicity") cj["samples"] = c.samples > 0 ? c.samples : 2048;
    if (c.id == "profile-inner") cj["samples"] = c.samples > 0 ? c.samples : 4096;
    cs.push_back(cj);
  }
  j["checks"] = cs;
  j["h"] = h;
  j["refine_levels"] = refine_levels;
  j["output_dir"] = output_dir.string();
  return j;
}

// ---------------------------------------------------------------- runner

namespace {

struct StageFailure {
  int code;
  std::string message;
};

template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageFailure&) {
    throw;
  } catch (const ConfigError& e) {
    throw StageFailure{kExitConfig, "stage " + name + ": " + e.what()};
  } catch (const RangeError& e) {
    throw StageFailure{kExitConfig, "stage " + name + ": " + e.what()};
  } catch (const std::exception& e) {
    throw StageFailure{kExitSolver, "stage " + name + ": " + e.what()};
  }
}

struct CellOutput {
  std::vector<std::pair<std::size_t, ComparisonReport>> reports;  // (check index, report)
  std::string mu_csv;
  std::string profile_csv;
  std::optional<StageFailure> failure;
};

class Cell {
public:
  Cell(const ExperimentConfig& cfg, MeshPtr mesh, double beta) : cfg_(cfg), mesh_(std::move(mesh)), beta_(beta) {}

  CellOutput evaluate(const std::vector<std::size_t>& which, int level) {
    CellOutput out;
    try {
      if (mesh_) problem_ = RobinProblem{mesh_, beta_, source()};
      for (std::size_t ci : which) {
        const CheckSpec& cs = cfg_.checks[ci];
        auto reps = stage("check " + cs.id, [&] { return run_check(cs); });
        for (auto& r : reps) {
          if (mesh_) r.context.beta = beta_;
          r.details["level"] = level;
          out.reports.emplace_back(ci, std::move(r));
        }
      }
      if (u_) {
        out.mu_csv = distribution_function(*u_).to_csv();
        const RadialProfile us = schwarz_rearrangement(distribution_function(*u_), cfg_.space);
        std::string csv = "r,u_sharp,v\n";
        const auto& grid = v_->grid();
        for (std::size_t i = 0; i < grid.size(); i += 8)
          csv += num(grid[i]) + "," + num(us(std::min(grid[i], us.radius()))) + "," + num(v_->values()[i]) + "\n";
        out.profile_csv = csv;
      }
    } catch (const StageFailure& f) {
      out.failure = f;
    }
    return out;
  }

private:
  std::optional<ScalarField> source() {
    return stage("source", [&]() -> std::optional<ScalarField> {
      std::vector<double> vals;
      switch (cfg_.source.kind) {
        case SourceConfig::Kind::torsion: return std::nullopt;
        case SourceConfig::Kind::expr: {
          const Expression e = Expression::parse(cfg_.source.expr);
          for (const auto& p : mesh_->vertices()) vals.push_back(e(p));
          break;
        }
        case SourceConfig::Kind::field:
          try {
            vals = load_field_values(cfg_.source.field);
          } catch (const ParseError& e) {
            throw ConfigError(e.what());
          }
          if (vals.size() != mesh_->vertex_count())
            throw ConfigError("field has " + std::to_string(vals.size()) + " values for " +
                              std::to_string(mesh_->vertex_count()) + " vertices");
          break;
      }
      for (std::size_t i = 0; i < vals.size(); ++i)
        if (!(vals[i] >= 0.0) || !std::isfinite(vals[i]))
          throw ConfigError("source must be finite and >= 0; got " + num(vals[i]) + " at vertex " + std::to_string(i));
      return ScalarField(mesh_, std::move(vals));
    });
  }

  const ScalarField& u() {
    if (!u_) u_ = stage("solve", [&] { return solve_robin_poisson(*problem_).u; });
    return *u_;
  }

  const RadialProfile& v() {
    if (!v_)
      v_ = stage("symmetrize", [&] {
        const ModelSpace& space = cfg_.space;
        if (problem_->is_torsion()) {
          const GeodesicBall ball(space, radius_for_volume(space, total_measure(*mesh_)));
          return solve_symmetrized_poisson(ball, beta_, RadialSource::constant(space, ball.radius, 1.0));
        }
        const DistributionData df = distribution_function(*problem_->source);
        const GeodesicBall ball(space, radius_for_volume(space, df.total()));
        return solve_symmetrized_poisson(ball, beta_, RadialSource::rearranged(df, space));
      });
    return *v_;
  }

  const EigenSolution& eig() {
    if (!eig_) eig_ = stage("eigen", [&] { return solve_robin_eigen(mesh_, beta_); });
    return *eig_;
  }

  std::vector<ComparisonReport> run_check(const CheckSpec& cs) {
    const ModelSpace& space = cfg_.space;
    const std::string& id = cs.id;
    if (id == "isoperimetric") return {check_isoperimetric(*mesh_, space)};
    if (id == "min-comparison") return {check_min_comparison(u(), v())};
    if (id == "measure-bound") return {check_measure_bound(u(), v(), cs.samples > 0 ? cs.samples : 200)};
    if (id == "lemma3.1") {
      const int n = cs.thresholds > 0 ? cs.thresholds : 20;
      const double lo = u().min(), hi = u().max();
      std::vector<double> ts;
      for (int k = 1; k <= n; ++k) ts.push_back(lo + (hi - lo) * (k - 0.5 + 0.0173) / n);
      return check_lemma_31(u(), *problem_, space, ts);
    }
    if (id == "lemma3.2") return {check_lemma_32(u(), *problem_, cs.t ? *cs.t : u().max())};
    if (id == "thm1.1") return {check_theorem_main1(u(), v(), space, cs.p, cs.q)};
    if (id == "thm1.2") return {check_theorem_main2(u(), v(), *problem_, space, cs.p, cs.q, false)};
    if (id == "thm1.2-pointwise") return {check_theorem_main2(u(), v(), *problem_, space, cs.p, cs.q, true)};
    if (id == "saint-venant") return {check_saint_venant(mesh_, space, beta_)};
    if (id == "bossel-daners") return {check_bossel_daners(mesh_, space, beta_)};
    if (id == "bossel-functional") {
      const int n = cs.thresholds > 0 ? cs.thresholds : 10;
      const double lo = eig().field.min();
      std::vector<double> ts;
      for (int k = 0; k < n; ++k) ts.push_back(lo + (1.0 - lo) * (k + 0.5) / n);
      return {check_bossel_functional(eig().field, eig().lambda, beta_, ts)};
    }
    if (id == "profile-monotonicity")
      return {check_profile_monotonicity(space, cs.p, cs.claim, cs.max_volume, cs.samples > 0 ? cs.samples : 2048)};
    if (id == "profile-inner") return {check_inner_inequality(space, cs.p, cs.samples > 0 ? cs.samples : 4096)};
    throw ConfigError("unknown check id '" + id + "'");
  }

  const ExperimentConfig& cfg_;
  MeshPtr mesh_;
  double beta_;
  std::optional<RobinProblem> problem_;
  std::optional<ScalarField> u_;
  std::optional<RadialProfile> v_;
  std::optional<EigenSolution> eig_;
};

MeshPtr build_mesh(const ExperimentConfig& cfg, double h) {
  return stage("mesh", [&]() -> MeshPtr {
    try {
      if (cfg.mesh_file) return std::make_shared<const MeasuredMesh>(load_mesh(*cfg.mesh_file));
      return std::make_shared<const MeasuredMesh>(generate_domain(*cfg.domain, h, cfg.metric));
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    } catch (const GeometryError& e) {
      throw ConfigError(e.what());
    }
  });
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  RunResult result;
  const bool meshed = cfg.needs_mesh();
  const int levels = meshed ? cfg.refine_levels + 1 : 1;
  const fs::path out_dir = options.output_dir ? *options.output_dir : cfg.output_dir;
  auto log = [&](const std::string& line) {
    if (options.log) *options.log << line << '\n';
  };

  struct CellKey {
    int level;
    std::size_t beta;
  };
  std::vector<CellKey> keys;
  std::vector<MeshPtr> meshes(static_cast<std::size_t>(levels));
  std::vector<double> hs(static_cast<std::size_t>(levels), kNaN);
  std::vector<std::size_t> all(cfg.checks.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

  try {
    for (int l = 0; l < levels; ++l) {
      if (meshed) {
        meshes[static_cast<std::size_t>(l)] = build_mesh(cfg, cfg.h / std::pow(2.0, l));
        hs[static_cast<std::size_t>(l)] = meshes[static_cast<std::size_t>(l)]->max_edge_length();
      }
      for (std::size_t b = 0; b < cfg.beta.size(); ++b) keys.push_back({l, b});
    }
  } catch (const StageFailure& f) {
    result.exit_code = f.code;
    result.diagnostic = f.message;
    return result;
  }

  std::vector<CellOutput> outputs(keys.size());
  {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i; (i = next.fetch_add(1)) < keys.size();) {
        Cell cell(cfg, meshes[static_cast<std::size_t>(keys[i].level)], cfg.beta[keys[i].beta]);
        outputs[i] = cell.evaluate(all, keys[i].level);
      }
    };
    const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(keys.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
  }
  for (const auto& o : outputs)
    if (o.failure) {
      result.exit_code = o.failure->code;
      result.diagnostic = o.failure->message;
      return result;
    }

  // One retry at h/2 for checks that fail at the finest level.
  const int finest = levels - 1;
  std::map<std::pair<std::size_t, std::size_t>, bool> final_pass;  // (beta, check) -> pass
  std::vector<std::pair<std::size_t, CellOutput>> retries;  // (beta, output)
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (keys[i].level != finest) continue;
    for (const auto& [ci, r] : outputs[i].reports) {
      auto [it, fresh] = final_pass.emplace(std::make_pair(keys[i].beta, ci), true);
      if (!r.passed) it->second = false;
    }
  }
  if (meshed && !cfg.mesh_file) {
    std::map<std::size_t, std::vector<std::size_t>> failed;
    for (const auto& [key, pass] : final_pass)
      if (!pass && is_mesh_check(cfg.checks[key.second].id)) failed[key.first].push_back(key.second);
    if (!failed.empty()) {
      MeshPtr fine;
      try {
        fine = build_mesh(cfg, cfg.h / std::pow(2.0, levels));
      } catch (const StageFailure& f) {
        result.exit_code = f.code;
        result.diagnostic = f.message;
        return result;
      }
      for (const auto& [b, which] : failed) {
        log("retrying " + std::to_string(which.size()) + " failed check(s) at beta=" + num(cfg.beta[b]) + " with h/2");
        Cell cell(cfg, fine, cfg.beta[b]);
        CellOutput o = cell.evaluate(which, levels);
        if (o.failure) {
          result.exit_code = o.failure->code;
          result.diagnostic = o.failure->message;
          return result;
        }
        std::map<std::size_t, bool> pass;
        for (auto& [ci, r] : o.reports) {
          r.details["retry"] = true;
          auto [it, fresh] = pass.emplace(ci, true);
          if (!r.passed) it->second = false;
        }
        for (const auto& [ci, p] : pass) final_pass[{b, ci}] = p;
        retries.emplace_back(b, std::move(o));
      }
    }
  }

  bool all_pass = true;
  std::string first_fail;
  for (const auto& [key, pass] : final_pass)
    if (!pass) {
      if (all_pass) {
        first_fail = cfg.checks[key.second].id;
        if (is_mesh_check(first_fail)) first_fail += " at beta=" + num(cfg.beta[key.first]);
        first_fail += retries.empty() ? " failed" : " failed after refinement retry";
      }
      all_pass = false;
    }

  // Reports in (level, beta, check, index) order; retries after the finest level.
  for (std::size_t i = 0; i < keys.size(); ++i) {
    auto reps = outputs[i].reports;
    std::stable_sort(reps.begin(), reps.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    int passed = 0;
    for (auto& [ci, r] : reps) {
      passed += r.passed ? 1 : 0;
      result.reports.push_back(std::move(r));
    }
    log("level " + std::to_string(keys[i].level) + " h=" + num(hs[static_cast<std::size_t>(keys[i].level)]) +
        " beta=" + num(cfg.beta[keys[i].beta]) + ": " + std::to_string(passed) + "/" + std::to_string(reps.size()) +
        " passed");
  }
  std::sort(retries.begin(), retries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [b, o] : retries)
    for (auto& [ci, r] : o.reports) result.reports.push_back(std::move(r));

  result.exit_code = all_pass ? kExitPass : kExitCheckFailed;
  if (!all_pass) result.diagnostic = "stage verify: check " + first_fail;

  if (options.write_files) {
    try {
      fs::create_directories(out_dir / "plots");
      std::string csv = ComparisonReport::csv_header() + "\n";
      std::string jsonl;
      for (const auto& r : result.reports) {
        csv += r.csv_row() + "\n";
        jsonl += r.to_json().dump() + "\n";
      }
      write_text(out_dir / "summary.csv", csv);
      write_text(out_dir / "reports.jsonl", jsonl);
      json echo = cfg.to_json();
      echo["output_dir"] = out_dir.string();
      write_text(out_dir / "config.json", echo.dump(2) + "\n");
      for (std::size_t i = 0; i < keys.size(); ++i) {
        const std::string tag = "L" + std::to_string(keys[i].level) + "_B" + std::to_string(keys[i].beta);
        if (!outputs[i].mu_csv.empty()) write_text(out_dir / "plots" / ("mu_" + tag + ".csv"), outputs[i].mu_csv);
        if (!outputs[i].profile_csv.empty())
          write_text(out_dir / "plots" / ("sharp_" + tag + ".csv"), outputs[i].profile_csv);
      }
      // Gap against h for every (check, beta), worst report per level.
      if (meshed)
        for (std::size_t ci = 0; ci < cfg.checks.size(); ++ci) {
          if (!is_mesh_check(cfg.checks[ci].id)) continue;
          for (std::size_t b = 0; b < cfg.beta.size(); ++b) {
            std::string table = "h,gap,tolerance\n";
            for (std::size_t i = 0; i < keys.size(); ++i) {
              if (keys[i].beta != b) continue;
              const ComparisonReport* worst = nullptr;
              for (const auto& [cj, r] : outputs[i].reports)
                if (cj == ci && !r.skipped && (!worst || r.gap < worst->gap)) worst = &r;
              if (worst) table += num(worst->context.h) + "," + num(worst->gap) + "," + num(worst->tolerance) + "\n";
            }
            write_text(out_dir / "plots" / ("gap_C" + std::to_string(ci) + "_B" + std::to_string(b) + ".csv"), table);
          }
        }
    } catch (const std::exception& e) {
      result.exit_code = kExitSolver;
      result.diagnostic = std::string("stage output: ") + e.what();
    }
  }
  return result;
}

}  // namespace robinsym
