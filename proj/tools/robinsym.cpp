#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <memory>
#include <numbers>
#include <string>

#include "robinsym/errors.hpp"
#include "robinsym/experiment.hpp"
#include "robinsym/mesh.hpp"

using namespace robinsym;

namespace {

MetricModel parse_metric(const std::string& s) {
  if (s == "flat") return MetricModel::flat();
  if (s == "sphere") return MetricModel::sphere();
  // warped:<profile>:<param>
  const auto a = s.find(':'), b = s.rfind(':');
  if (s.rfind("warped:", 0) == 0 && a != b)
    return MetricModel::warped(WarpedSurfaceSpec(s.substr(a + 1, b - a - 1), std::stod(s.substr(b + 1))));
  throw ConfigError("metric must be flat, sphere or warped:<profile>:<param>");
}

std::vector<Point2> parse_points(const std::string& s) {
  std::vector<Point2> pts;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t end = std::min(s.find(';', pos), s.size());
    const std::string item = s.substr(pos, end - pos);
    const auto comma = item.find(',');
    if (comma == std::string::npos) throw ConfigError("points must look like 'x,y;x,y;...'");
    pts.push_back({std::stod(item.substr(0, comma)), std::stod(item.substr(comma + 1))});
    pos = end + 1;
  }
  return pts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symmetrization comparison checks for Robin problems"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment configuration");
  std::string config_path, output_dir;
  int jobs = 1;
  bool quiet = false;
  run->add_option("config", config_path, "Configuration JSON")->required();
  run->add_option("--output-dir", output_dir, "Override the configured output directory");
  run->add_option("--jobs", jobs, "Concurrent (level, beta) cells")->check(CLI::PositiveNumber);
  run->add_flag("--quiet", quiet, "Only print the final status");

  auto* list = app.add_subcommand("list-checks", "List check ids with statements and ranges");
  bool as_json = false;
  list->add_flag("--json", as_json, "Machine-readable output");

  auto* mesh = app.add_subcommand("mesh", "Mesh utilities");
  mesh->require_subcommand(1);
  auto* gen = mesh->add_subcommand("gen", "Generate a domain mesh");
  std::string kind, metric = "flat", out, points;
  double h = 0.05, radius = 1.0, side = 1.0, theta = std::numbers::pi / 2;
  double r_inner = 0.5, r_outer = 1.0, theta0 = 0.0, theta1 = std::numbers::pi / 2;
  gen->add_option("kind", kind, "disk, square, polygon, spherical_cap or annulus_sector")
      ->required()
      ->check(CLI::IsMember({"disk", "square", "polygon", "spherical_cap", "annulus_sector"}));
  gen->add_option("--mesh-size", h, "Target chart edge length")->check(CLI::PositiveNumber);
  gen->add_option("--radius", radius, "Disk radius");
  gen->add_option("--side", side, "Square side");
  gen->add_option("--theta", theta, "Cap angular radius");
  gen->add_option("--points", points, "Polygon vertices 'x,y;x,y;...'");
  gen->add_option("--r-inner", r_inner);
  gen->add_option("--r-outer", r_outer);
  gen->add_option("--theta0", theta0);
  gen->add_option("--theta1", theta1);
  gen->add_option("--metric", metric, "flat, sphere or warped:<profile>:<param>");
  gen->add_option("--out", out, "Output mesh JSON")->required();

  auto* validate = mesh->add_subcommand("validate", "Load a mesh file and check its invariants");
  std::string mesh_path;
  validate->add_option("file", mesh_path, "Mesh JSON")->required();

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    ExperimentConfig cfg;
    try {
      cfg = ExperimentConfig::load(config_path);
    } catch (const ConfigError& e) {
      std::cerr << "error: stage config: " << e.what() << "\n";
      return kExitConfig;
    }
    RunOptions opts;
    if (!output_dir.empty()) opts.output_dir = output_dir;
    opts.jobs = jobs;
    if (!quiet) opts.log = &std::cout;
    const RunResult res = run_experiment(cfg, opts);
    if (res.exit_code != kExitPass) std::cerr << "error: " << res.diagnostic << "\n";
    else if (!quiet) std::cout << "all checks passed\n";
    return res.exit_code;
  }

  if (*list) {
    if (as_json) std::cout << list_checks_json().dump(2) << "\n";
    else std::cout << list_checks_text();
    return 0;
  }

  if (*gen) {
    try {
      const MetricModel m = parse_metric(metric);
      DomainSpec spec;
      if (kind == "disk") spec = DiskDomain{radius, {}};
      else if (kind == "square") spec = SquareDomain{side, {}};
      else if (kind == "polygon") spec = PolygonDomain{parse_points(points)};
      else if (kind == "spherical_cap") spec = SphericalCapDomain{theta};
      else spec = AnnulusSectorDomain{r_inner, r_outer, theta0, theta1};
      const MeasuredMesh mm = generate_domain(spec, h, m);
      save_mesh(mm, out);
      std::cout << mm.vertex_count() << " vertices, " << mm.triangle_count() << " triangles, h = "
                << mm.max_edge_length() << "\n";
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitConfig;
    }
  }

  if (*validate) {
    try {
      const MeasuredMesh mm = load_mesh(mesh_path);
      std::printf("valid: %zu vertices, %zu triangles, %zu boundary edges\n", mm.vertex_count(), mm.triangle_count(),
                  mm.boundary_edges().size());
      std::printf("measure %.17g, boundary %.17g, h %.17g\n", total_measure(mm), boundary_measure(mm),
                  mm.max_edge_length());
      return 0;
    } catch (const InvariantError& e) {
      std::cerr << "invalid: " << e.what() << "\n";
      return kExitCheckFailed;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitConfig;
    }
  }
  return 0;
}
