#pragma once

// Triangulated 2-D domains carrying a Riemannian metric in a single chart.
//
// Three metric models are supported:
//   flat                  area density 1 (or a conformal factor given per vertex)
//   sphere_stereographic  conformal density 4 / (1 + |x|^2)^2 of the unit sphere
//   warped                dr^2 + psi(r)^2 dtheta^2 in a polar chart, area density psi(r)/r
//
// Vertex densities are interpolated linearly inside each triangle. For the
// conformal models the length density is sqrt(area density); for warped
// surfaces it depends on direction and is evaluated from psi.

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace robinsym {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
};

using Triangle = std::array<int, 3>;
using Edge = std::array<int, 2>;
using Bary = std::array<double, 3>;

/// 2x2 symmetric tensor stored as (xx, xy, yy).
struct SymTensor2 {
  double xx = 1.0;
  double xy = 0.0;
  double yy = 1.0;
};

/// Rotationally symmetric surface dr^2 + psi(r)^2 dtheta^2 from a closed-form catalog.
///
///   cone(c)        psi = c r                                 avr = c
///   exp_blend(a)   psi = a r + (1 - a)(1 - exp(-r))          avr = a
///   atan_blend(a)  psi = a r + (1 - a) atan(r)               avr = a
///
/// All members have psi'' <= 0, so the Gauss curvature -psi''/psi is
/// nonnegative. The blends are smooth at the pole (psi'(0) = 1); the cone
/// carries its curvature at the apex.
class WarpedSurfaceSpec {
public:
  WarpedSurfaceSpec(std::string name, double param);

  const std::string& name() const noexcept { return name_; }
  double param() const noexcept { return param_; }
  /// Asymptotic volume ratio lim psi(r) / r, exact for the catalog.
  double avr() const noexcept { return param_; }

  double psi(double r) const;
  double dpsi(double r) const;
  double d2psi(double r) const;
  /// psi(r) / r with its limit psi'(0) at r = 0.
  double ratio(double r) const;

  bool operator==(const WarpedSurfaceSpec&) const = default;

private:
  std::string name_;
  double param_;
};

enum class GeometryKind { flat, sphere_stereographic, warped };

std::string to_string(GeometryKind kind);
GeometryKind geometry_kind_from_string(const std::string& s);

class MetricModel {
public:
  static MetricModel flat() { return MetricModel(GeometryKind::flat, std::nullopt); }
  static MetricModel sphere() { return MetricModel(GeometryKind::sphere_stereographic, std::nullopt); }
  static MetricModel warped(WarpedSurfaceSpec spec) {
    return MetricModel(GeometryKind::warped, std::move(spec));
  }

  GeometryKind kind() const noexcept { return kind_; }
  bool conformal() const noexcept { return kind_ != GeometryKind::warped; }
  const std::optional<WarpedSurfaceSpec>& warp() const noexcept { return warp_; }

  /// sqrt(det g) at a chart point.
  double area_density(Point2 p) const;
  /// sqrt(e^T g e) for a unit chart direction e (conformal models use the analytic factor).
  double length_density(Point2 p, Point2 unit_dir) const;
  /// Metric tensor g at a chart point.
  SymTensor2 metric(Point2 p) const;
  /// sqrt(det g) g^{-1}; the identity for conformal metrics in 2-D.
  SymTensor2 stiffness_weight(Point2 p) const;

  bool operator==(const MetricModel&) const = default;

private:
  MetricModel(GeometryKind k, std::optional<WarpedSurfaceSpec> w) : kind_(k), warp_(std::move(w)) {}
  GeometryKind kind_;
  std::optional<WarpedSurfaceSpec> warp_;
};

class MeasuredMesh {
public:
  /// Validates every invariant; throws InvariantError naming the failing check.
  /// Empty density vectors are filled from the metric model.
  MeasuredMesh(std::vector<Point2> vertices, std::vector<Triangle> triangles,
               std::vector<Edge> boundary_edges, MetricModel metric,
               std::vector<double> density = {},
               std::vector<std::array<double, 2>> boundary_density = {});

  const std::vector<Point2>& vertices() const noexcept { return vertices_; }
  const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
  const std::vector<Edge>& boundary_edges() const noexcept { return boundary_edges_; }
  const std::vector<double>& density() const noexcept { return density_; }
  const std::vector<std::array<double, 2>>& boundary_density() const noexcept {
    return boundary_density_;
  }
  const MetricModel& metric() const noexcept { return metric_; }

  std::size_t vertex_count() const noexcept { return vertices_.size(); }
  std::size_t triangle_count() const noexcept { return triangles_.size(); }

  /// Chart area of triangle t (positive for CCW triangles).
  double chart_area(std::size_t t) const;
  /// Mean of the vertex densities of triangle t, i.e. the P1 density at its centroid.
  double centroid_density(std::size_t t) const;
  /// Chart point at barycentric coordinates b inside triangle t.
  Point2 point(std::size_t t, const Bary& b) const;
  /// P1-interpolated area density.
  double density_at(std::size_t t, const Bary& b) const;
  /// Length density along a chart direction inside triangle t.
  double length_density_at(std::size_t t, const Bary& b, Point2 unit_dir) const;
  /// Inverse metric at the centroid of triangle t, used for |grad u|_g.
  SymTensor2 inverse_metric_at_centroid(std::size_t t) const;

  /// Longest chart edge length; the mesh size h.
  double max_edge_length() const noexcept { return max_edge_; }
  bool is_boundary_vertex(int v) const { return boundary_vertex_[static_cast<std::size_t>(v)]; }

private:
  void validate() const;

  std::vector<Point2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> boundary_edges_;
  MetricModel metric_;
  std::vector<double> density_;
  std::vector<std::array<double, 2>> boundary_density_;
  std::vector<bool> boundary_vertex_;
  double max_edge_ = 0.0;
};

using MeshPtr = std::shared_ptr<const MeasuredMesh>;

/// Piecewise-linear field given by its vertex values.
class ScalarField {
public:
  ScalarField(MeshPtr mesh, std::vector<double> values);

  const MeasuredMesh& mesh() const noexcept { return *mesh_; }
  const MeshPtr& mesh_ptr() const noexcept { return mesh_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const noexcept { return values_.size(); }

  double min() const;
  double max() const;
  double at(std::size_t t, const Bary& b) const;

private:
  MeshPtr mesh_;
  std::vector<double> values_;
};

/// Samples fn at every vertex.
ScalarField interpolate(const MeshPtr& mesh, const std::function<double(Point2)>& fn);

// ---- domain generation ----

struct DiskDomain {
  double radius = 1.0;
  Point2 center{};
};
/// Axis-aligned square [x0, x0 + side] x [y0, y0 + side].
struct SquareDomain {
  double side = 1.0;
  Point2 origin{};
};
/// Simple polygon, either orientation.
struct PolygonDomain {
  std::vector<Point2> points;
};
/// Geodesic cap of the unit sphere centred at the chart origin; always uses the sphere metric.
struct SphericalCapDomain {
  double theta = std::numbers::pi / 2;
};
/// Polar sector r_inner <= r <= r_outer, theta0 <= theta <= theta1 (full annulus when the span is 2 pi).
struct AnnulusSectorDomain {
  double r_inner = 0.5;
  double r_outer = 1.0;
  double theta0 = 0.0;
  double theta1 = std::numbers::pi / 2;
};

using DomainSpec =
    std::variant<DiskDomain, SquareDomain, PolygonDomain, SphericalCapDomain, AnnulusSectorDomain>;

/// Conforming triangulation with chart edge length <= target_h.
MeasuredMesh generate_domain(const DomainSpec& kind, double target_h, const MetricModel& metric);

/// Chart radius of the stereographic image of a geodesic cap of radius theta.
double stereographic_radius(double theta);

// ---- measures ----

/// sum over triangles of int density, exact for the P1 density.
double total_measure(const MeasuredMesh& mesh);
/// sum over boundary edges of chart length times the mean endpoint length density.
double boundary_measure(const MeasuredMesh& mesh);

// ---- JSON I/O ----

MeasuredMesh load_mesh(const std::filesystem::path& path);
MeasuredMesh mesh_from_json_text(const std::string& text);
std::string mesh_to_json_text(const MeasuredMesh& mesh);
void save_mesh(const MeasuredMesh& mesh, const std::filesystem::path& path);

/// ScalarField JSON form {"mesh_ref": ..., "values": [...]}.
void save_field(const ScalarField& field, const std::string& mesh_ref,
                const std::filesystem::path& path);
std::vector<double> load_field_values(const std::filesystem::path& path);

}  // namespace robinsym
