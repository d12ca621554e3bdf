#include "robinsym/mesh.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "robinsym/errors.hpp"

namespace robinsym {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSphereChartCap = 10.0;

double norm(Point2 p) { return std::hypot(p.x, p.y); }
Point2 sub(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
double signed_area(Point2 a, Point2 b, Point2 c) { return 0.5 * cross(sub(b, a), sub(c, a)); }

SymTensor2 radial_tangential(Point2 p, double radial, double tangential) {
  const double r = norm(p);
  if (r < 1e-300) return {0.5 * (radial + tangential), 0.0, 0.5 * (radial + tangential)};
  const double cx = p.x / r, cy = p.y / r;
  // radial * rr^T + tangential * tt^T with t = (-cy, cx)
  return {radial * cx * cx + tangential * cy * cy, (radial - tangential) * cx * cy,
          radial * cy * cy + tangential * cx * cx};
}

}  // namespace

// ---------------------------------------------------------------- warped catalog

WarpedSurfaceSpec::WarpedSurfaceSpec(std::string name, double param)
    : name_(std::move(name)), param_(param) {
  if (name_ != "cone" && name_ != "exp_blend" && name_ != "atan_blend")
    throw DomainError("unknown warped profile '" + name_ + "'");
  if (!(param_ > 0.0 && param_ <= 1.0))
    throw DomainError("warped profile parameter must lie in (0, 1]");
}

double WarpedSurfaceSpec::psi(double r) const {
  const double a = param_;
  if (name_ == "cone") return a * r;
  if (name_ == "exp_blend") return a * r + (1.0 - a) * (-std::expm1(-r));
  return a * r + (1.0 - a) * std::atan(r);
}

double WarpedSurfaceSpec::dpsi(double r) const {
  const double a = param_;
  if (name_ == "cone") return a;
  if (name_ == "exp_blend") return a + (1.0 - a) * std::exp(-r);
  return a + (1.0 - a) / (1.0 + r * r);
}

double WarpedSurfaceSpec::d2psi(double r) const {
  const double a = param_;
  if (name_ == "cone") return 0.0;
  if (name_ == "exp_blend") return -(1.0 - a) * std::exp(-r);
  const double q = 1.0 + r * r;
  return -2.0 * (1.0 - a) * r / (q * q);
}

double WarpedSurfaceSpec::ratio(double r) const {
  if (r < 1e-8) return dpsi(0.0) + 0.5 * d2psi(0.0) * r;
  return psi(r) / r;
}

std::string to_string(GeometryKind kind) {
  switch (kind) {
    case GeometryKind::flat: return "flat";
    case GeometryKind::sphere_stereographic: return "sphere_stereographic";
    case GeometryKind::warped: return "warped";
  }
  return "flat";
}

GeometryKind geometry_kind_from_string(const std::string& s) {
  if (s == "flat") return GeometryKind::flat;
  if (s == "sphere_stereographic") return GeometryKind::sphere_stereographic;
  if (s == "warped") return GeometryKind::warped;
  throw ParseError("unknown geometry '" + s + "'");
}

// ---------------------------------------------------------------- metric model

double MetricModel::area_density(Point2 p) const {
  switch (kind_) {
    case GeometryKind::flat: return 1.0;
    case GeometryKind::sphere_stereographic: {
      const double q = 1.0 + p.x * p.x + p.y * p.y;
      return 4.0 / (q * q);
    }
    case GeometryKind::warped: return warp_->ratio(norm(p));
  }
  return 1.0;
}

double MetricModel::length_density(Point2 p, Point2 e) const {
  switch (kind_) {
    case GeometryKind::flat: return 1.0;
    case GeometryKind::sphere_stereographic: return 2.0 / (1.0 + p.x * p.x + p.y * p.y);
    case GeometryKind::warped: {
      const double r = norm(p);
      if (r < 1e-300) return 1.0;  // every direction is radial at the pole
      const double er = (e.x * p.x + e.y * p.y) / r;
      const double et = (-e.x * p.y + e.y * p.x) / r;
      const double q = warp_->ratio(r);
      return std::sqrt(er * er + q * q * et * et);
    }
  }
  return 1.0;
}

SymTensor2 MetricModel::metric(Point2 p) const {
  if (kind_ != GeometryKind::warped) {
    const double d = area_density(p);
    return {d, 0.0, d};
  }
  const double q = warp_->ratio(norm(p));
  return radial_tangential(p, 1.0, q * q);
}

SymTensor2 MetricModel::stiffness_weight(Point2 p) const {
  if (kind_ != GeometryKind::warped) return {};
  const double q = warp_->ratio(norm(p));
  return radial_tangential(p, q, 1.0 / q);
}

// ---------------------------------------------------------------- measured mesh

MeasuredMesh::MeasuredMesh(std::vector<Point2> vertices, std::vector<Triangle> triangles,
                           std::vector<Edge> boundary_edges, MetricModel metric,
                           std::vector<double> density,
                           std::vector<std::array<double, 2>> boundary_density)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      boundary_edges_(std::move(boundary_edges)),
      metric_(std::move(metric)),
      density_(std::move(density)),
      boundary_density_(std::move(boundary_density)) {
  const long nv = static_cast<long>(vertices_.size());
  if (nv == 0 || triangles_.empty()) throw InvariantError("nonempty", 0, "mesh has no triangles");
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (!std::isfinite(vertices_[i].x) || !std::isfinite(vertices_[i].y))
      throw InvariantError("finite_vertex", static_cast<long>(i), "");
    if (metric_.kind() == GeometryKind::sphere_stereographic && norm(vertices_[i]) > kSphereChartCap)
      throw InvariantError("chart_radius", static_cast<long>(i), "|x| exceeds 10 in the sphere chart");
  }
  for (std::size_t t = 0; t < triangles_.size(); ++t)
    for (int v : triangles_[t])
      if (v < 0 || v >= nv) throw InvariantError("triangle_index", static_cast<long>(t), "");
  for (std::size_t e = 0; e < boundary_edges_.size(); ++e)
    for (int v : boundary_edges_[e])
      if (v < 0 || v >= nv) throw InvariantError("boundary_edge_index", static_cast<long>(e), "");

  if (density_.empty()) {
    density_.reserve(vertices_.size());
    for (const auto& p : vertices_) density_.push_back(metric_.area_density(p));
  }
  if (density_.size() != vertices_.size())
    throw InvariantError("density_size", static_cast<long>(density_.size()), "");
  if (boundary_density_.empty()) {
    boundary_density_.reserve(boundary_edges_.size());
    for (const auto& e : boundary_edges_) {
      const Point2 a = vertices_[e[0]], b = vertices_[e[1]];
      const Point2 d = sub(b, a);
      const double len = norm(d);
      const Point2 dir = len > 0 ? Point2{d.x / len, d.y / len} : Point2{1.0, 0.0};
      if (metric_.conformal()) {
        boundary_density_.push_back({std::sqrt(density_[e[0]]), std::sqrt(density_[e[1]])});
      } else {
        boundary_density_.push_back({metric_.length_density(a, dir), metric_.length_density(b, dir)});
      }
    }
  }
  if (boundary_density_.size() != boundary_edges_.size())
    throw InvariantError("boundary_density_size", static_cast<long>(boundary_density_.size()), "");

  validate();

  boundary_vertex_.assign(vertices_.size(), false);
  for (const auto& e : boundary_edges_) {
    boundary_vertex_[e[0]] = true;
    boundary_vertex_[e[1]] = true;
  }
  for (const auto& t : triangles_)
    for (int k = 0; k < 3; ++k)
      max_edge_ = std::max(max_edge_, norm(sub(vertices_[t[(k + 1) % 3]], vertices_[t[k]])));
}

void MeasuredMesh::validate() const {
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    if (!(chart_area(t) > 0.0))
      throw InvariantError("triangle_orientation", static_cast<long>(t),
                           "triangle is not counterclockwise with positive area");
  }
  for (std::size_t v = 0; v < density_.size(); ++v)
    if (!(density_[v] > 0.0) || !std::isfinite(density_[v]))
      throw InvariantError("density_positive", static_cast<long>(v), "density must be > 0");
  for (std::size_t e = 0; e < boundary_density_.size(); ++e)
    for (double d : boundary_density_[e])
      if (!(d > 0.0) || !std::isfinite(d))
        throw InvariantError("boundary_density_positive", static_cast<long>(e), "");

  // directed edge -> owning triangle
  std::map<std::pair<int, int>, long> directed;
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tri = triangles_[t];
    for (int k = 0; k < 3; ++k) {
      const std::pair<int, int> key{tri[k], tri[(k + 1) % 3]};
      if (!directed.emplace(key, static_cast<long>(t)).second)
        throw InvariantError("edge_manifold", static_cast<long>(t),
                             "directed edge shared by two triangles");
    }
  }
  std::map<std::pair<int, int>, long> boundary;
  for (std::size_t e = 0; e < boundary_edges_.size(); ++e) {
    const auto& be = boundary_edges_[e];
    if (directed.find({be[0], be[1]}) == directed.end())
      throw InvariantError("boundary_edge_in_one_triangle", static_cast<long>(e),
                           "no triangle carries this edge with outward orientation");
    if (directed.find({be[1], be[0]}) != directed.end())
      throw InvariantError("boundary_edge_in_one_triangle", static_cast<long>(e),
                           "edge is shared by two triangles");
    if (!boundary.emplace(std::pair{be[0], be[1]}, static_cast<long>(e)).second)
      throw InvariantError("boundary_edge_unique", static_cast<long>(e), "");
  }
  for (const auto& [key, t] : directed) {
    if (directed.find({key.second, key.first}) == directed.end() &&
        boundary.find(key) == boundary.end())
      throw InvariantError("boundary_complete", t, "free triangle edge missing from boundary_edges");
  }
  std::vector<int> degree(vertices_.size(), 0);
  for (const auto& be : boundary_edges_) {
    ++degree[be[0]];
    --degree[be[1]];
  }
  for (std::size_t v = 0; v < degree.size(); ++v)
    if (degree[v] != 0)
      throw InvariantError("boundary_closed_loops", static_cast<long>(v),
                           "boundary edges do not form closed loops");
}

double MeasuredMesh::chart_area(std::size_t t) const {
  const auto& tri = triangles_[t];
  return signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
}

double MeasuredMesh::centroid_density(std::size_t t) const {
  const auto& tri = triangles_[t];
  return (density_[tri[0]] + density_[tri[1]] + density_[tri[2]]) / 3.0;
}

Point2 MeasuredMesh::point(std::size_t t, const Bary& b) const {
  const auto& tri = triangles_[t];
  Point2 p{};
  for (int k = 0; k < 3; ++k) {
    p.x += b[k] * vertices_[tri[k]].x;
    p.y += b[k] * vertices_[tri[k]].y;
  }
  return p;
}

double MeasuredMesh::density_at(std::size_t t, const Bary& b) const {
  const auto& tri = triangles_[t];
  return b[0] * density_[tri[0]] + b[1] * density_[tri[1]] + b[2] * density_[tri[2]];
}

double MeasuredMesh::length_density_at(std::size_t t, const Bary& b, Point2 unit_dir) const {
  if (metric_.conformal()) return std::sqrt(density_at(t, b));
  return metric_.length_density(point(t, b), unit_dir);
}

SymTensor2 MeasuredMesh::inverse_metric_at_centroid(std::size_t t) const {
  const Bary c{1.0 / 3, 1.0 / 3, 1.0 / 3};
  if (metric_.conformal()) {
    const double d = centroid_density(t);
    return {1.0 / d, 0.0, 1.0 / d};
  }
  const Point2 p = point(t, c);
  const double q = metric_.warp()->ratio(norm(p));
  return radial_tangential(p, 1.0, 1.0 / (q * q));
}

// ---------------------------------------------------------------- scalar field

ScalarField::ScalarField(MeshPtr mesh, std::vector<double> values)
    : mesh_(std::move(mesh)), values_(std::move(values)) {
  if (!mesh_) throw InvariantError("field_mesh", 0, "null mesh");
  if (values_.size() != mesh_->vertex_count())
    throw InvariantError("field_size", static_cast<long>(values_.size()),
                         "value count differs from vertex count");
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (!std::isfinite(values_[i])) throw InvariantError("field_finite", static_cast<long>(i), "");
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

double ScalarField::at(std::size_t t, const Bary& b) const {
  const auto& tri = mesh_->triangles()[t];
  return b[0] * values_[tri[0]] + b[1] * values_[tri[1]] + b[2] * values_[tri[2]];
}

ScalarField interpolate(const MeshPtr& mesh, const std::function<double(Point2)>& fn) {
  std::vector<double> v;
  v.reserve(mesh->vertex_count());
  for (const auto& p : mesh->vertices()) v.push_back(fn(p));
  return ScalarField(mesh, std::move(v));
}

// ---------------------------------------------------------------- generation

namespace {

struct RawMesh {
  std::vector<Point2> vertices;
  std::vector<Triangle> triangles;
};

double raw_max_edge(const RawMesh& m) {
  double h = 0.0;
  for (const auto& t : m.triangles)
    for (int k = 0; k < 3; ++k)
      h = std::max(h, norm(sub(m.vertices[t[(k + 1) % 3]], m.vertices[t[k]])));
  return h;
}

/// Longest edge measured with the metric length density at the edge midpoint.
double raw_max_metric_edge(const RawMesh& m, const MetricModel& metric) {
  double h = 0.0;
  for (const auto& t : m.triangles)
    for (int k = 0; k < 3; ++k) {
      const Point2 a = m.vertices[t[k]], b = m.vertices[t[(k + 1) % 3]];
      const Point2 d = sub(b, a);
      const double len = norm(d);
      const Point2 mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
      h = std::max(h, len * metric.length_density(mid, {d.x / len, d.y / len}));
    }
  return h;
}

/// Free edges of a consistently oriented triangulation, in triangle orientation.
std::vector<Edge> free_edges(const std::vector<Triangle>& tris) {
  std::map<std::pair<int, int>, int> count;
  for (const auto& t : tris)
    for (int k = 0; k < 3; ++k) count[{t[k], t[(k + 1) % 3]}] += 1;
  std::vector<Edge> out;
  for (const auto& t : tris)
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      if (count.find({b, a}) == count.end()) out.push_back({a, b});
    }
  return out;
}

/// Concentric rings with 6k vertices on ring k.
RawMesh ring_disk(double radius, Point2 center, int rings) {
  RawMesh m;
  m.vertices.push_back(center);
  auto ring_start = [](int k) { return 1 + 3 * k * (k - 1); };
  for (int k = 1; k <= rings; ++k) {
    const double r = radius * k / rings;
    const int count = 6 * k;
    for (int j = 0; j < count; ++j) {
      const double a = 2.0 * kPi * j / count;
      m.vertices.push_back({center.x + r * std::cos(a), center.y + r * std::sin(a)});
    }
  }
  for (int j = 0; j < 6; ++j) m.triangles.push_back({0, ring_start(1) + j, ring_start(1) + (j + 1) % 6});
  for (int k = 2; k <= rings; ++k) {
    const int n_in = 6 * (k - 1), n_out = 6 * k;
    const int s_in = ring_start(k - 1), s_out = ring_start(k);
    int i = 0, j = 0;
    while (i < n_in || j < n_out) {
      const double a_next = static_cast<double>(i + 1) / n_in;
      const double b_next = static_cast<double>(j + 1) / n_out;
      const int in_i = s_in + i % n_in, out_j = s_out + j % n_out;
      if (i < n_in && (j >= n_out || a_next < b_next)) {
        m.triangles.push_back({in_i, out_j, s_in + (i + 1) % n_in});
        ++i;
      } else {
        m.triangles.push_back({in_i, out_j, s_out + (j + 1) % n_out});
        ++j;
      }
    }
  }
  return m;
}

// Edges are bounded by h both in the chart and in surface length.
RawMesh make_disk(double radius, Point2 center, double h, const MetricModel& metric) {
  int rings = std::max(1, static_cast<int>(std::ceil(radius / h)));
  for (;;) {
    RawMesh m = ring_disk(radius, center, rings);
    const double worst = std::max(raw_max_edge(m), raw_max_metric_edge(m, metric));
    if (worst <= h) return m;
    rings = std::max(rings + 1, static_cast<int>(std::ceil(rings * worst / h)));
  }
}

RawMesh make_square(double side, Point2 origin, double h) {
  int n = std::max(1, static_cast<int>(std::ceil(side * std::sqrt(2.0) / h)));
  RawMesh m;
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      m.vertices.push_back({origin.x + side * i / n, origin.y + side * j / n});
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if ((i + j) % 2 == 0) {
        m.triangles.push_back({a, b, c});
        m.triangles.push_back({a, c, d});
      } else {
        m.triangles.push_back({a, b, d});
        m.triangles.push_back({b, c, d});
      }
    }
  return m;
}

RawMesh make_annulus_sector(const AnnulusSectorDomain& d, double h) {
  if (!(d.r_inner > 0.0 && d.r_outer > d.r_inner))
    throw GeometryError("annulus sector needs 0 < r_inner < r_outer");
  const double span = d.theta1 - d.theta0;
  if (!(span > 0.0 && span <= 2.0 * kPi + 1e-12))
    throw GeometryError("annulus sector angle span must lie in (0, 2 pi]");
  const bool full = span >= 2.0 * kPi - 1e-12;
  int nr = std::max(1, static_cast<int>(std::ceil((d.r_outer - d.r_inner) / h)));
  int nt = std::max(full ? 3 : 1, static_cast<int>(std::ceil(span * d.r_outer / h)));
  for (;;) {
    RawMesh m;
    const int cols = full ? nt : nt + 1;
    auto id = [cols, nt](int i, int j) { return i * cols + (j % (cols == nt ? nt : cols)); };
    for (int i = 0; i <= nr; ++i) {
      const double r = d.r_inner + (d.r_outer - d.r_inner) * i / nr;
      for (int j = 0; j < cols; ++j) {
        const double a = d.theta0 + span * j / nt;
        m.vertices.push_back({r * std::cos(a), r * std::sin(a)});
      }
    }
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < nt; ++j) {
        const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), e = id(i, j + 1);
        // (a, b, c, e) runs outward then counterclockwise
        if ((i + j) % 2 == 0) {
          m.triangles.push_back({a, b, c});
          m.triangles.push_back({a, c, e});
        } else {
          m.triangles.push_back({a, b, e});
          m.triangles.push_back({b, c, e});
        }
      }
    if (raw_max_edge(m) <= h) return m;
    if (span * d.r_outer / nt > (d.r_outer - d.r_inner) / nr)
      ++nt;
    else
      ++nr;
  }
}

bool segments_intersect(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
  auto orient = [](Point2 a, Point2 b, Point2 c) {
    const double v = cross(sub(b, a), sub(c, a));
    return (v > 0) - (v < 0);
  };
  auto on_segment = [](Point2 a, Point2 b, Point2 c) {
    return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= c.y &&
           c.y <= std::max(a.y, b.y);
  };
  const int o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2);
  const int o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

double min_angle(Point2 a, Point2 b, Point2 c) {
  auto ang = [](Point2 p, Point2 q, Point2 r) {
    const Point2 u = sub(q, p), v = sub(r, p);
    return std::atan2(std::abs(cross(u, v)), u.x * v.x + u.y * v.y);
  };
  return std::min({ang(a, b, c), ang(b, c, a), ang(c, a, b)});
}

bool point_in_triangle(Point2 p, Point2 a, Point2 b, Point2 c) {
  return cross(sub(b, a), sub(p, a)) >= 0 && cross(sub(c, b), sub(p, b)) >= 0 &&
         cross(sub(a, c), sub(p, c)) >= 0;
}

/// Ear clipping that always removes the ear with the largest minimum angle.
RawMesh ear_clip(std::vector<Point2> pts) {
  const std::size_t n = pts.size();
  if (n < 3) throw GeometryError("polygon needs at least 3 points");
  double area2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) area2 += cross(pts[i], pts[(i + 1) % n]);
  if (std::abs(area2) < 1e-14) throw GeometryError("polygon has zero area");
  if (area2 < 0) std::reverse(pts.begin(), pts.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (pts[i] == pts[(i + 1) % n]) throw GeometryError("polygon has repeated consecutive points");
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]))
        throw GeometryError("polygon is self-intersecting");
    }
  }
  RawMesh m;
  m.vertices = pts;
  std::vector<int> ring(n);
  for (std::size_t i = 0; i < n; ++i) ring[i] = static_cast<int>(i);
  while (ring.size() > 3) {
    const std::size_t k = ring.size();
    double best = -1.0;
    std::size_t best_i = k;
    for (std::size_t i = 0; i < k; ++i) {
      const int ia = ring[(i + k - 1) % k], ib = ring[i], ic = ring[(i + 1) % k];
      const Point2 a = pts[ia], b = pts[ib], c = pts[ic];
      if (signed_area(a, b, c) <= 1e-14) continue;
      bool contains = false;
      for (std::size_t j = 0; j < k && !contains; ++j) {
        const int v = ring[j];
        if (v == ia || v == ib || v == ic) continue;
        contains = point_in_triangle(pts[v], a, b, c);
      }
      if (contains) continue;
      const double q = min_angle(a, b, c);
      if (q > best) {
        best = q;
        best_i = i;
      }
    }
    if (best_i == k) throw GeometryError("ear clipping failed (degenerate polygon)");
    m.triangles.push_back({ring[(best_i + k - 1) % k], ring[best_i], ring[(best_i + 1) % k]});
    ring.erase(ring.begin() + static_cast<long>(best_i));
  }
  if (signed_area(pts[ring[0]], pts[ring[1]], pts[ring[2]]) <= 0)
    throw GeometryError("ear clipping failed (degenerate polygon)");
  m.triangles.push_back({ring[0], ring[1], ring[2]});
  return m;
}

RawMesh midpoint_refine(const RawMesh& in) {
  RawMesh out;
  out.vertices = in.vertices;
  std::map<std::pair<int, int>, int> mid;
  auto midpoint = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = mid.find({key.first, key.second});
    if (it != mid.end()) return it->second;
    const Point2 p{0.5 * (in.vertices[a].x + in.vertices[b].x),
                   0.5 * (in.vertices[a].y + in.vertices[b].y)};
    out.vertices.push_back(p);
    const int id = static_cast<int>(out.vertices.size()) - 1;
    mid.emplace(std::pair{key.first, key.second}, id);
    return id;
  };
  for (const auto& t : in.triangles) {
    const int ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
    out.triangles.push_back({t[0], ab, ca});
    out.triangles.push_back({ab, t[1], bc});
    out.triangles.push_back({ca, bc, t[2]});
    out.triangles.push_back({ab, bc, ca});
  }
  return out;
}

MeasuredMesh finish(RawMesh raw, const MetricModel& metric) {
  auto edges = free_edges(raw.triangles);
  return MeasuredMesh(std::move(raw.vertices), std::move(raw.triangles), std::move(edges), metric);
}

}  // namespace

double stereographic_radius(double theta) { return std::tan(0.5 * theta); }

MeasuredMesh generate_domain(const DomainSpec& kind, double target_h, const MetricModel& metric) {
  if (!(target_h > 0.0)) throw GeometryError("target_h must be > 0");
  return std::visit(
      [&](const auto& d) -> MeasuredMesh {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, DiskDomain>) {
          if (!(d.radius > 0.0)) throw GeometryError("disk radius must be > 0");
          return finish(make_disk(d.radius, d.center, target_h, metric), metric);
        } else if constexpr (std::is_same_v<T, SquareDomain>) {
          if (!(d.side > 0.0)) throw GeometryError("square side must be > 0");
          return finish(make_square(d.side, d.origin, target_h), metric);
        } else if constexpr (std::is_same_v<T, PolygonDomain>) {
          RawMesh m = ear_clip(d.points);
          while (raw_max_edge(m) > target_h) m = midpoint_refine(m);
          return finish(std::move(m), metric);
        } else if constexpr (std::is_same_v<T, SphericalCapDomain>) {
          if (!(d.theta > 0.0 && d.theta < kPi)) throw GeometryError("cap angle must lie in (0, pi)");
          const double rho = stereographic_radius(d.theta);
          if (rho > kSphereChartCap) throw GeometryError("cap exceeds the stereographic chart cap");
          return finish(make_disk(rho, {}, target_h, MetricModel::sphere()), MetricModel::sphere());
        } else {
          return finish(make_annulus_sector(d, target_h), metric);
        }
      },
      kind);
}

// ---------------------------------------------------------------- measures

double total_measure(const MeasuredMesh& mesh) {
  double sum = 0.0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t)
    sum += mesh.chart_area(t) * mesh.centroid_density(t);
  return sum;
}

double boundary_measure(const MeasuredMesh& mesh) {
  double sum = 0.0;
  const auto& v = mesh.vertices();
  for (std::size_t e = 0; e < mesh.boundary_edges().size(); ++e) {
    const auto& be = mesh.boundary_edges()[e];
    const auto& bd = mesh.boundary_density()[e];
    sum += norm(sub(v[be[1]], v[be[0]])) * 0.5 * (bd[0] + bd[1]);
  }
  return sum;
}

// ---------------------------------------------------------------- JSON

using nlohmann::json;

std::string mesh_to_json_text(const MeasuredMesh& mesh) {
  json j;
  j["geometry"] = to_string(mesh.metric().kind());
  if (const auto& w = mesh.metric().warp())
    j["warp"] = {{"name", w->name()}, {"params", json::array({w->param()})}, {"avr", w->avr()}};
  json verts = json::array();
  for (const auto& p : mesh.vertices()) verts.push_back({p.x, p.y});
  j["vertices"] = std::move(verts);
  j["triangles"] = mesh.triangles();
  j["boundary_edges"] = mesh.boundary_edges();
  j["density"] = mesh.density();
  j["boundary_density"] = mesh.boundary_density();
  return j.dump();
}

MeasuredMesh mesh_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("mesh JSON: ") + e.what());
  }
  try {
    const GeometryKind kind = geometry_kind_from_string(j.at("geometry").get<std::string>());
    MetricModel metric = MetricModel::flat();
    if (kind == GeometryKind::sphere_stereographic) metric = MetricModel::sphere();
    if (kind == GeometryKind::warped) {
      const auto& w = j.at("warp");
      const auto params = w.at("params").get<std::vector<double>>();
      if (params.size() != 1) throw ParseError("warp params must hold exactly one number");
      WarpedSurfaceSpec spec(w.at("name").get<std::string>(), params[0]);
      if (w.contains("avr") && std::abs(w.at("avr").get<double>() - spec.avr()) > 1e-12)
        throw ParseError("warp avr does not match the catalog profile");
      metric = MetricModel::warped(std::move(spec));
    }
    std::vector<Point2> vertices;
    for (const auto& p : j.at("vertices")) {
      if (p.size() != 2) throw ParseError("vertex must have two coordinates");
      vertices.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    auto triangles = j.at("triangles").get<std::vector<Triangle>>();
    auto edges = j.at("boundary_edges").get<std::vector<Edge>>();
    std::vector<double> density;
    if (j.contains("density")) density = j["density"].get<std::vector<double>>();
    std::vector<std::array<double, 2>> bdensity;
    if (j.contains("boundary_density"))
      bdensity = j["boundary_density"].get<std::vector<std::array<double, 2>>>();
    return MeasuredMesh(std::move(vertices), std::move(triangles), std::move(edges),
                        std::move(metric), std::move(density), std::move(bdensity));
  } catch (const json::exception& e) {
    throw ParseError(std::string("mesh JSON: ") + e.what());
  } catch (const DomainError& e) {
    throw ParseError(std::string("mesh JSON: ") + e.what());
  }
}

MeasuredMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open mesh file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return mesh_from_json_text(ss.str());
}

void save_mesh(const MeasuredMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write mesh file " + path.string());
  out << mesh_to_json_text(mesh) << '\n';
}

void save_field(const ScalarField& field, const std::string& mesh_ref,
                const std::filesystem::path& path) {
  json j;
  j["mesh_ref"] = mesh_ref;
  j["values"] = field.values();
  std::ofstream out(path);
  if (!out) throw Error("cannot write field file " + path.string());
  out << j.dump() << '\n';
}

std::vector<double> load_field_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open field file " + path.string());
  try {
    json j = json::parse(in);
    return j.at("values").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("field JSON: ") + e.what());
  }
}

}  // namespace robinsym
