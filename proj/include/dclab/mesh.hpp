#pragma once

// P1 triangulations of polygonal domains: structured right-triangle meshes for
// axis-aligned polygons, Delaunay refinement with optional radial grading
// toward selected corners, red refinement, and the boundary trace space.

#include <Eigen/Sparse>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "delaunay.hpp"
#include "error.hpp"
#include "geometry.hpp"

namespace dclab {

enum class MeshMethod { automatic, structured, delaunay };

struct MeshOptions {
  double h = 0.1;  // grid spacing for structured meshes, target edge length otherwise
  std::map<int, double> grading;         // corner -> mu in (0, 1]
  std::map<int, double> grading_radius;  // corner -> radius of the graded zone (default 4 R_j)
  MeshMethod method = MeshMethod::automatic;
  double min_angle_deg = 20.5;

  bool graded() const {
    return std::any_of(grading.begin(), grading.end(), [](const auto& kv) { return kv.second < 1.0; });
  }
};

struct MeshBoundaryEdge {
  std::array<int, 2> nodes{};  // oriented counterclockwise along the boundary
  int side = 0;
  double s0 = 0.0, s1 = 0.0;  // arc length of the endpoints from the start of the side
};

struct TriMesh {
  std::shared_ptr<const PolygonalDomain> domain;
  std::vector<Point> nodes;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<MeshBoundaryEdge> boundary_edges;
  std::vector<int> corner_nodes;  // corner j -> node id
  std::vector<double> grading;    // mu per corner, 1 when ungraded
  double h = 0.0;                 // longest edge
  double min_angle = 0.0;         // radians
  bool non_obtuse = false;
  bool structured = false;
  MeshOptions recipe;
  int level = 0;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  const PolygonalDomain& geometry() const { return *domain; }
  double area(int t) const {
    const auto& tr = triangles[t];
    return 0.5 * orient(nodes[tr[0]], nodes[tr[1]], nodes[tr[2]]);
  }
  Point centroid(int t) const {
    const auto& tr = triangles[t];
    return (1.0 / 3.0) * (nodes[tr[0]] + nodes[tr[1]] + nodes[tr[2]]);
  }
  bool is_graded() const {
    return std::any_of(grading.begin(), grading.end(), [](double m) { return m < 1.0; });
  }
};

namespace detail {

inline double snap(double v, const std::vector<double>& targets, double tol) {
  for (double t : targets)
    if (std::abs(v - t) <= tol) return t;
  return v;
}

inline std::optional<RawMesh> structured_mesh(const PolygonalDomain& d, double h) {
  for (int j = 0; j < d.size(); ++j) {
    const Point a = d.side_start(j), b = d.side_end(j);
    if (a.x != b.x && a.y != b.y) return std::nullopt;
  }
  double x0 = d.vertex(0).x, x1 = x0, y0 = d.vertex(0).y, y1 = y0;
  std::vector<double> xs, ys;
  for (const Point& p : d.vertices()) {
    x0 = std::min(x0, p.x), x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
    xs.push_back(p.x), ys.push_back(p.y);
  }
  for (const Point& p : d.vertices())
    if (!near_integer((p.x - x0) / h) || !near_integer((p.y - y0) / h)) return std::nullopt;
  const int nx = static_cast<int>(std::lround((x1 - x0) / h));
  const int ny = static_cast<int>(std::lround((y1 - y0) / h));
  if (nx < 1 || ny < 1) return std::nullopt;
  const double tol = 1e-9 * h;
  std::vector<int> id((nx + 1) * (ny + 1), -1);
  RawMesh out;
  auto node = [&](int i, int k) {
    int& slot = id[k * (nx + 1) + i];
    if (slot < 0) {
      slot = static_cast<int>(out.nodes.size());
      out.nodes.push_back({snap(x0 + i * h, xs, tol), snap(y0 + k * h, ys, tol)});
    }
    return slot;
  };
  for (int k = 0; k < ny; ++k)
    for (int i = 0; i < nx; ++i) {
      const Point c{x0 + (i + 0.5) * h, y0 + (k + 0.5) * h};
      if (!d.contains(c)) continue;
      const int p00 = node(i, k), p10 = node(i + 1, k), p11 = node(i + 1, k + 1), p01 = node(i, k + 1);
      out.triangles.push_back({p00, p10, p11});
      out.triangles.push_back({p00, p11, p01});
    }
  return out;
}

/// Local target size: h away from graded corners, h (r/G)^{1-mu} inside the
/// graded zone of radius G, never below G (h/G)^{1/mu}.
inline double graded_size(const PolygonalDomain& d, const MeshOptions& o, Point x) {
  double s = o.h;
  for (const auto& [j, mu] : o.grading) {
    if (mu >= 1.0) continue;
    const double G = o.grading_radius.count(j) ? o.grading_radius.at(j) : 4.0 * d.corner(j).cutoff_radius;
    const double r = distance(x, d.vertex(j));
    if (r >= G) continue;
    const double floor = G * std::pow(std::min(o.h / G, 1.0), 1.0 / mu);
    s = std::min(s, std::max(o.h * std::pow(r / G, 1.0 - mu), floor));
  }
  return s;
}

inline double min_graded_size(const PolygonalDomain& d, const MeshOptions& o) {
  double s = o.h;
  for (const auto& [j, mu] : o.grading) {
    if (mu >= 1.0) continue;
    const double G = o.grading_radius.count(j) ? o.grading_radius.at(j) : 4.0 * d.corner(j).cutoff_radius;
    s = std::min(s, G * std::pow(std::min(o.h / G, 1.0), 1.0 / mu));
  }
  return s;
}

/// Boundary points equidistributing the integral of 1/size along every side.
inline std::vector<Point> boundary_points(const PolygonalDomain& d, const MeshOptions& o) {
  std::vector<Point> out;
  const double hmin = min_graded_size(d, o);
  for (int j = 0; j < d.size(); ++j) {
    const Point A = d.side_start(j), B = d.side_end(j);
    const double L = d.side_length(j);
    out.push_back(A);
    if (!o.graded()) {
      const int n = std::max(1, static_cast<int>(std::ceil(L / o.h - 1e-9)));
      for (int k = 1; k < n; ++k) out.push_back(A + (static_cast<double>(k) / n) * (B - A));
      continue;
    }
    const int N = static_cast<int>(std::clamp(8.0 * L / hmin, 64.0, 4.0e6));
    std::vector<double> F(N + 1, 0.0);
    double prev = 1.0 / graded_size(d, o, A);
    for (int i = 1; i <= N; ++i) {
      const double cur = 1.0 / graded_size(d, o, A + (static_cast<double>(i) / N) * (B - A));
      F[i] = F[i - 1] + 0.5 * (prev + cur) * L / N;
      prev = cur;
    }
    const int n = std::max(1, static_cast<int>(std::ceil(F[N] - 1e-9)));
    int i = 0;
    for (int k = 1; k < n; ++k) {
      const double target = F[N] * k / n;
      while (F[i + 1] < target) ++i;
      const double t = (i + (target - F[i]) / (F[i + 1] - F[i])) / N;
      out.push_back(A + t * (B - A));
    }
  }
  return out;
}

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace detail

/// Checks every structural invariant; throws MeshError on the first failure.
inline void validate_mesh(const TriMesh& m) {
  const PolygonalDomain& d = m.geometry();
  double total = 0.0;
  for (int t = 0; t < m.num_triangles(); ++t) {
    const double a = m.area(t);
    if (!(a > 0.0)) throw MeshError("triangle " + std::to_string(t) + " has non-positive area");
    total += a;
  }
  if (std::abs(total - d.area()) > 1e-12 * d.area() * 10)
    throw MeshError("triangle areas do not sum to the polygon area");
  std::unordered_map<std::uint64_t, int> count;
  for (const auto& tr : m.triangles)
    for (int k = 0; k < 3; ++k) ++count[detail::edge_key(tr[k], tr[(k + 1) % 3])];
  std::size_t n_boundary = 0;
  for (const auto& [key, c] : count) {
    if (c > 2) throw MeshError("edge shared by more than two triangles");
    if (c == 1) ++n_boundary;
  }
  if (n_boundary != m.boundary_edges.size()) throw MeshError("boundary edge bookkeeping mismatch");
  std::vector<double> len(d.size(), 0.0);
  for (const auto& e : m.boundary_edges) len[e.side] += e.s1 - e.s0;
  for (int j = 0; j < d.size(); ++j)
    if (std::abs(len[j] - d.side_length(j)) > 1e-10 * d.side_length(j))
      throw MeshError("boundary edges do not cover side " + std::to_string(j));
  for (int j = 0; j < d.size(); ++j)
    if (m.corner_nodes.at(j) < 0 || !(m.nodes[m.corner_nodes[j]] == d.vertex(j)))
      throw MeshError("corner " + std::to_string(j) + " is not a mesh node");
}

/// Orients triangles, tags boundary edges and corners, and computes mesh metrics.
inline TriMesh finalize_mesh(detail::RawMesh raw, std::shared_ptr<const PolygonalDomain> dom,
                             const MeshOptions& recipe, bool structured) {
  const PolygonalDomain& d = *dom;
  TriMesh m;
  m.domain = std::move(dom);
  m.recipe = recipe;
  m.structured = structured;
  m.nodes = std::move(raw.nodes);
  m.triangles = std::move(raw.triangles);
  const double scale = d.diameter();

  m.corner_nodes.assign(d.size(), -1);
  for (int j = 0; j < d.size(); ++j)
    for (int i = 0; i < m.num_nodes(); ++i)
      if (distance(m.nodes[i], d.vertex(j)) <= 1e-10 * scale) {
        m.nodes[i] = d.vertex(j);
        m.corner_nodes[j] = i;
        break;
      }

  for (auto& tr : m.triangles) {
    const double a = orient(m.nodes[tr[0]], m.nodes[tr[1]], m.nodes[tr[2]]);
    if (a == 0.0) throw MeshError("degenerate triangle");
    if (a < 0.0) std::swap(tr[1], tr[2]);
  }

  std::unordered_map<std::uint64_t, std::pair<int, std::array<int, 2>>> edges;
  edges.reserve(3 * m.triangles.size());
  for (const auto& tr : m.triangles)
    for (int k = 0; k < 3; ++k) {
      auto [it, fresh] = edges.try_emplace(detail::edge_key(tr[k], tr[(k + 1) % 3]),
                                           std::make_pair(0, std::array<int, 2>{tr[k], tr[(k + 1) % 3]}));
      ++it->second.first;
    }
  for (const auto& [key, val] : edges) {
    if (val.first != 1) continue;
    const auto [a, b] = val.second;
    int side = -1;
    for (int j = 0; j < d.size() && side < 0; ++j) {
      const Point s = d.side_start(j), e = d.side_end(j);
      if (distance_to_segment(m.nodes[a], s, e) <= 1e-10 * scale &&
          distance_to_segment(m.nodes[b], s, e) <= 1e-10 * scale)
        side = j;
    }
    if (side < 0) throw MeshError("boundary edge does not lie on any side");
    MeshBoundaryEdge be;
    be.nodes = {a, b};
    be.side = side;
    be.s0 = distance(m.nodes[a], d.side_start(side));
    be.s1 = distance(m.nodes[b], d.side_start(side));
    if (!(be.s1 > be.s0)) throw MeshError("boundary edge runs against the side orientation");
    m.boundary_edges.push_back(be);
  }
  std::sort(m.boundary_edges.begin(), m.boundary_edges.end(), [](const auto& x, const auto& y) {
    return x.side != y.side ? x.side < y.side : x.s0 < y.s0;
  });

  m.grading.assign(d.size(), 1.0);
  for (const auto& [j, mu] : recipe.grading) {
    if (j < 0 || j >= d.size()) throw MeshError("grading given for unknown corner");
    if (!(mu > 0.0 && mu <= 1.0)) throw MeshError("grading exponent must lie in (0, 1]");
    m.grading[j] = mu;
  }
  m.h = 0.0;
  m.min_angle = pi;
  bool non_obtuse = true;
  for (const auto& tr : m.triangles) {
    const Point a = m.nodes[tr[0]], b = m.nodes[tr[1]], c = m.nodes[tr[2]];
    m.h = std::max({m.h, distance(a, b), distance(b, c), distance(c, a)});
    m.min_angle = std::min(m.min_angle, detail::min_angle(a, b, c));
    for (int k = 0; k < 3; ++k) {
      const Point p = m.nodes[tr[k]], q = m.nodes[tr[(k + 1) % 3]], r = m.nodes[tr[(k + 2) % 3]];
      const Point u = q - p, v = r - p;
      if (dot(u, v) < -1e-12 * norm(u) * norm(v)) non_obtuse = false;
    }
  }
  m.non_obtuse = non_obtuse;
  validate_mesh(m);
  return m;
}

inline TriMesh triangulate(const PolygonalDomain& domain, const MeshOptions& options) {
  if (!(options.h > 0.0)) throw MeshError("mesh size must be positive");
  for (const auto& [j, mu] : options.grading)
    if (!(mu > 0.0 && mu <= 1.0)) throw MeshError("grading exponent must lie in (0, 1]");
  auto dom = std::make_shared<const PolygonalDomain>(domain);
  if (options.method != MeshMethod::delaunay && !options.graded()) {
    if (auto raw = detail::structured_mesh(domain, options.h))
      return finalize_mesh(std::move(*raw), dom, options, true);
    if (options.method == MeshMethod::structured)
      throw MeshError("structured mesh needs an axis-aligned polygon with vertices on the h-grid");
  }
  if (options.method == MeshMethod::structured)
    throw MeshError("structured meshes cannot be graded");
  // Every side must be resolved by at least one edge; anything coarser than
  // the shortest side is still accepted because sides are split anyway.
  if (options.h > 2.0 * domain.diameter())
    throw MeshError("mesh size exceeds the domain diameter; nothing to resolve");
  detail::RefineParams params;
  params.min_angle_deg = options.min_angle_deg;
  params.size = [&domain, &options](Point x) { return detail::graded_size(domain, options, x); };
  detail::DelaunayRefiner refiner;
  auto raw = refiner.run(detail::boundary_points(domain, options), params);
  return finalize_mesh(std::move(raw), dom, options, false);
}

inline TriMesh triangulate(const PolygonalDomain& domain, double h,
                           const std::map<int, double>& grading = {}) {
  MeshOptions o;
  o.h = h;
  o.grading = grading;
  return triangulate(domain, o);
}

/// Red refinement for ungraded meshes; graded meshes are regenerated with h/2
/// so that the refined mesh stays in the same grading family.
inline TriMesh refine_uniform(const TriMesh& mesh) {
  MeshOptions recipe = mesh.recipe;
  recipe.h *= 0.5;
  if (mesh.is_graded()) {
    TriMesh out = triangulate(mesh.geometry(), recipe);
    out.level = mesh.level + 1;
    return out;
  }
  detail::RawMesh raw;
  raw.nodes = mesh.nodes;
  std::unordered_map<std::uint64_t, int> mid;
  mid.reserve(3 * mesh.triangles.size());
  auto midpoint = [&](int a, int b) {
    auto [it, fresh] = mid.try_emplace(detail::edge_key(a, b), static_cast<int>(raw.nodes.size()));
    if (fresh) raw.nodes.push_back(0.5 * (mesh.nodes[a] + mesh.nodes[b]));
    return it->second;
  };
  raw.triangles.reserve(4 * mesh.triangles.size());
  for (const auto& tr : mesh.triangles) {
    const int a = tr[0], b = tr[1], c = tr[2];
    const int ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
    raw.triangles.push_back({a, ab, ca});
    raw.triangles.push_back({ab, b, bc});
    raw.triangles.push_back({ca, bc, c});
    raw.triangles.push_back({ab, bc, ca});
  }
  TriMesh out = finalize_mesh(std::move(raw), mesh.domain, recipe, mesh.structured);
  out.level = mesh.level + 1;
  return out;
}

/// Boundary nodes in counterclockwise order starting at corner 0, with the
/// boundary mass matrix in that ordering.
struct BoundaryTrace {
  std::vector<int> node;          // boundary index -> mesh node
  std::vector<int> side;          // side the node starts (corner j belongs to side j)
  std::vector<double> arc;        // arc length from the start of that side
  std::vector<double> global_arc; // arc length from corner 0
  std::vector<int> index_of;      // mesh node -> boundary index, -1 for interior nodes
  std::vector<std::array<int, 2>> edges;  // boundary edges in boundary indices
  std::vector<int> edge_side;
  Eigen::SparseMatrix<double> mass;  // consistent P1 mass on the boundary
  Eigen::VectorXd lumped;            // row sums of mass

  int size() const { return static_cast<int>(node.size()); }

  /// Boundary indices on the closed side j, ordered by arc length.
  std::vector<int> side_nodes(int j) const {
    std::vector<int> out;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (edge_side[e] != j) continue;
      if (out.empty()) out.push_back(edges[e][0]);
      out.push_back(edges[e][1]);
    }
    return out;
  }
};

inline BoundaryTrace boundary_trace_space(const TriMesh& m) {
  BoundaryTrace bt;
  bt.index_of.assign(m.num_nodes(), -1);
  double offset = 0.0;
  const PolygonalDomain& d = m.geometry();
  std::vector<double> side_offset(d.size(), 0.0);
  for (int j = 0; j < d.size(); ++j) {
    side_offset[j] = offset;
    offset += d.side_length(j);
  }
  // boundary_edges is sorted by (side, s0), so this visits nodes in order.
  for (const auto& e : m.boundary_edges) {
    const int a = e.nodes[0];
    if (bt.index_of[a] >= 0) throw MeshError("boundary is not a single simple loop");
    bt.index_of[a] = bt.size();
    bt.node.push_back(a);
    bt.side.push_back(e.side);
    bt.arc.push_back(e.s0);
    bt.global_arc.push_back(side_offset[e.side] + e.s0);
  }
  std::vector<Eigen::Triplet<double>> trip;
  bt.lumped = Eigen::VectorXd::Zero(bt.size());
  for (const auto& e : m.boundary_edges) {
    const int i = bt.index_of[e.nodes[0]], k = bt.index_of[e.nodes[1]];
    if (k < 0) throw MeshError("boundary edge endpoint missing from the trace");
    bt.edges.push_back({i, k});
    bt.edge_side.push_back(e.side);
    const double L = e.s1 - e.s0;
    trip.emplace_back(i, i, L / 3.0);
    trip.emplace_back(k, k, L / 3.0);
    trip.emplace_back(i, k, L / 6.0);
    trip.emplace_back(k, i, L / 6.0);
    bt.lumped[i] += L / 2.0;
    bt.lumped[k] += L / 2.0;
  }
  bt.mass.resize(bt.size(), bt.size());
  bt.mass.setFromTriplets(trip.begin(), trip.end());
  return bt;
}

/// nodes.csv, triangles.csv and boundary_edges.csv in `dir`.
inline void write_mesh_csv(const TriMesh& m, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream n(dir / "nodes.csv"), t(dir / "triangles.csv"), b(dir / "boundary_edges.csv");
  if (!n || !t || !b) throw Error("cannot write mesh files to " + dir.string());
  n.precision(17);
  b.precision(17);
  n << "id,x,y\n";
  for (int i = 0; i < m.num_nodes(); ++i) n << i << ',' << m.nodes[i].x << ',' << m.nodes[i].y << '\n';
  t << "id,n0,n1,n2\n";
  for (int i = 0; i < m.num_triangles(); ++i)
    t << i << ',' << m.triangles[i][0] << ',' << m.triangles[i][1] << ',' << m.triangles[i][2] << '\n';
  b << "n0,n1,side,s0,s1\n";
  for (const auto& e : m.boundary_edges)
    b << e.nodes[0] << ',' << e.nodes[1] << ',' << e.side << ',' << e.s0 << ',' << e.s1 << '\n';
}

/// Legacy ASCII VTK unstructured grid with optional nodal scalar fields.
inline void write_vtk(const TriMesh& m, const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, std::vector<double>>>& fields = {}) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f.precision(17);
  f << "# vtk DataFile Version 3.0\ndclab mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  f << "POINTS " << m.num_nodes() << " double\n";
  for (const Point& p : m.nodes) f << p.x << ' ' << p.y << " 0\n";
  f << "CELLS " << m.num_triangles() << ' ' << 4 * m.num_triangles() << '\n';
  for (const auto& tr : m.triangles) f << "3 " << tr[0] << ' ' << tr[1] << ' ' << tr[2] << '\n';
  f << "CELL_TYPES " << m.num_triangles() << '\n';
  for (int i = 0; i < m.num_triangles(); ++i) f << "5\n";
  if (fields.empty()) return;
  f << "POINT_DATA " << m.num_nodes() << '\n';
  for (const auto& [name, values] : fields) {
    if (static_cast<int>(values.size()) != m.num_nodes()) throw Error("field size mismatch for " + name);
    f << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : values) f << v << '\n';
  }
}

}  // namespace dclab
