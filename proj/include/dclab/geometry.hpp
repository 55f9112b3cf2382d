#pragma once

// Polygonal domains, their corners and the closed-form corner-singularity
// quantities attached to them: singular exponents, cut-off functions,
// singular functions with their boundary normal derivatives, index sets of
// singular modes and the Sobolev exponents they determine.
//
// Indices are zero based. Corner j sits at vertex x_j; side j runs from x_j to
// x_{j+1}, so the sides meeting at corner j are side j (theta = 0) and side
// j-1 (theta = omega_j).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace dclab {

inline constexpr double pi = std::numbers::pi;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
inline Point operator*(Point a, double s) { return {s * a.x, s * a.y}; }
inline bool operator==(Point a, Point b) { return a.x == b.x && a.y == b.y; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline double distance(Point a, Point b) { return norm(a - b); }

/// Twice the signed area of (a, b, c); positive when counterclockwise.
inline double orient(Point a, Point b, Point c) { return cross(b - a, c - a); }

inline double distance_to_segment(Point p, Point a, Point b) {
  const Point ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, a + t * ab);
}

/// A real number or +infinity, kept apart so that unbounded exponents are
/// never confused with large finite ones.
class Extended {
public:
  static Extended finite(double v) { return Extended(v, false); }
  static Extended infinity() { return Extended(0.0, true); }

  bool is_infinite() const { return infinite_; }
  double value() const {
    if (infinite_) throw Error("value() called on an unbounded exponent");
    return value_;
  }
  std::string str() const {
    if (infinite_) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", value_);
    return buf;
  }
  friend bool operator==(const Extended& a, const Extended& b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }

private:
  Extended(double v, bool inf) : value_(v), infinite_(inf) {}
  double value_;
  bool infinite_;
};

struct CornerData {
  int index = 0;
  Point position;
  double angle = 0.0;          // interior angle omega_j
  double lambda = 0.0;         // leading singular exponent pi / omega_j
  double cutoff_radius = 0.0;  // R_j
  bool convex = false;         // omega_j < pi
  // Vertex of a chordal approximation of a smooth arc, or a flat vertex.
  // Such vertices carry no corner singularity and are skipped by every
  // singular-set computation.
  bool smooth = false;
};

struct LocalPolar {
  double r = 0.0;
  double theta = 0.0;
};

/// The two sides meeting at a corner.
enum class CornerSide {
  outgoing,  // side j, theta = 0, chi = +1
  incoming,  // side j-1, theta = omega_j, chi = -1
};

struct DomainOptions {
  std::string name = "polygon";
  std::map<int, double> cutoff_radius;  // per-corner R_j overrides
  std::vector<int> smooth_vertices;
};

using CornerSet = std::vector<int>;

/// H^1, H^2, H^3 (or any triple of per-mode corner sets).
struct ModeSets {
  std::array<CornerSet, 3> sets;
  const CornerSet& operator[](int m) const { return sets.at(m - 1); }
  CornerSet& operator[](int m) { return sets.at(m - 1); }
};

struct SobolevExponents {
  Extended p_omega = Extended::infinity();
  Extended t_omega = Extended::infinity();
  Extended p_dirichlet = Extended::infinity();
};

inline constexpr double kIntegralityTol = 1e-9;

inline bool near_integer(double v, double tol = kIntegralityTol) {
  return std::abs(v - std::round(v)) < tol;
}

class PolygonalDomain {
public:
  static PolygonalDomain build(std::vector<Point> vertices, const DomainOptions& options = {});

  int size() const { return static_cast<int>(vertices_.size()); }
  const std::string& name() const { return name_; }
  int next(int j) const { return (j + 1) % size(); }
  int prev(int j) const { return (j + size() - 1) % size(); }

  const Point& vertex(int j) const { return vertices_.at(wrap(j)); }
  std::span<const Point> vertices() const { return vertices_; }
  const CornerData& corner(int j) const { return corners_.at(wrap(j)); }
  std::span<const CornerData> corners() const { return corners_; }

  Point side_start(int j) const { return vertex(j); }
  Point side_end(int j) const { return vertex(j + 1); }
  double side_length(int j) const { return distance(side_start(j), side_end(j)); }
  Point side_direction(int j) const {
    const Point d = side_end(j) - side_start(j);
    return (1.0 / norm(d)) * d;
  }
  Point outward_normal(int j) const {
    const Point t = side_direction(j);
    return {t.y, -t.x};
  }

  double area() const { return area_; }
  double perimeter() const;
  double diameter() const;

  /// Point-in-polygon with points on the boundary counted as inside.
  bool contains(Point p, double tol = 1e-12) const;
  double distance_to_boundary(Point p) const;

  /// Minimum exponent over genuine corners; nullopt when every vertex is smooth.
  std::optional<double> min_lambda() const;

  /// Local polar coordinates at corner j; nullopt when p lies outside the
  /// closed wedge by more than the angular tolerance.
  std::optional<LocalPolar> try_local_polar(int j, Point p, double tol = 1e-12) const;
  LocalPolar local_polar(int j, Point p) const;

  double cutoff(int j, double r) const;
  /// d^k xi_j / dr^k for k = 0, 1, 2.
  double cutoff_derivative(int j, double r, int order) const;

private:
  int wrap(int j) const { return ((j % size()) + size()) % size(); }

  std::string name_;
  std::vector<Point> vertices_;
  std::vector<CornerData> corners_;
  double area_ = 0.0;
};

namespace detail {

inline double signed_area(std::span<const Point> v) {
  double a = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) a += cross(v[i], v[(i + 1) % v.size()]);
  return 0.5 * a;
}

inline bool segments_intersect(Point a, Point b, Point c, Point d) {
  const double d1 = orient(c, d, a), d2 = orient(c, d, b);
  const double d3 = orient(a, b, c), d4 = orient(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  auto on_seg = [](Point p, Point q, Point r) {
    return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) && std::min(p.y, q.y) <= r.y &&
           r.y <= std::max(p.y, q.y);
  };
  if (d1 == 0 && on_seg(c, d, a)) return true;
  if (d2 == 0 && on_seg(c, d, b)) return true;
  if (d3 == 0 && on_seg(a, b, c)) return true;
  if (d4 == 0 && on_seg(a, b, d)) return true;
  return false;
}

}  // namespace detail

inline PolygonalDomain PolygonalDomain::build(std::vector<Point> vertices,
                                              const DomainOptions& options) {
  const int n = static_cast<int>(vertices.size());
  if (n < 3) throw GeometryError("polygon needs at least 3 vertices, got " + std::to_string(n));
  for (const Point& p : vertices)
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw GeometryError("polygon vertex with non-finite coordinate");

  for (int i = 0; i < n; ++i) {
    if (vertices[i] == vertices[(i + 1) % n])
      throw GeometryError("zero-length side " + std::to_string(i));
    for (int k = i + 1; k < n; ++k)
      if (vertices[i] == vertices[k])
        throw GeometryError("repeated vertex " + std::to_string(i) + " = " + std::to_string(k));
  }
  // Non-adjacent sides must not meet.
  for (int i = 0; i < n; ++i)
    for (int k = i + 1; k < n; ++k) {
      if (k == i + 1 || (i == 0 && k == n - 1)) continue;
      if (detail::segments_intersect(vertices[i], vertices[(i + 1) % n], vertices[k],
                                     vertices[(k + 1) % n]))
        throw GeometryError("self-intersecting polygon: sides " + std::to_string(i) + " and " +
                            std::to_string(k));
    }
  const double area = detail::signed_area(vertices);
  if (!(area > 0.0))
    throw GeometryError("polygon vertices are ordered clockwise (signed area " +
                        std::to_string(area) + "); supply them counterclockwise");

  PolygonalDomain dom;
  dom.name_ = options.name;
  dom.vertices_ = std::move(vertices);
  dom.area_ = area;
  dom.corners_.resize(n);

  double exterior_sum = 0.0;
  for (int j = 0; j < n; ++j) {
    const Point x = dom.vertices_[j];
    const Point e1 = dom.vertices_[(j + 1) % n] - x;
    const Point e0 = dom.vertices_[(j + n - 1) % n] - x;
    double w = std::atan2(cross(e1, e0), dot(e1, e0));
    if (w <= 0.0) w += 2.0 * pi;
    if (!(w > 0.0 && w < 2.0 * pi))
      throw GeometryError("interior angle at corner " + std::to_string(j) + " outside (0, 2pi)");
    CornerData& c = dom.corners_[j];
    c.index = j;
    c.position = x;
    c.angle = w;
    c.lambda = pi / w;
    c.convex = w < pi;
    c.smooth = std::abs(w - pi) < kIntegralityTol;
    exterior_sum += pi - w;
  }
  if (std::abs(exterior_sum - 2.0 * pi) > 1e-9)
    throw GeometryError("exterior angles do not sum to 2pi; polygon is not simple");
  for (int j : options.smooth_vertices) {
    if (j < 0 || j >= n) throw GeometryError("smooth vertex index out of range");
    dom.corners_[j].smooth = true;
  }

  // Cut-off radii: a quarter of the local feature size, shrunk so that the
  // sector of radius 2 R_j stays inside the polygon.
  for (int j = 0; j < n; ++j) {
    const Point x = dom.vertices_[j];
    double min_vertex = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      if (i != j) min_vertex = std::min(min_vertex, distance(x, dom.vertices_[i]));
    double non_adjacent = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
      if (k == j || k == (j + n - 1) % n) continue;
      non_adjacent = std::min(non_adjacent,
                              distance_to_segment(x, dom.vertices_[k], dom.vertices_[(k + 1) % n]));
    }
    const double adjacent = std::min(dom.side_length(j), dom.side_length(j - 1));
    double r = 0.25 * std::min(adjacent, 0.5 * min_vertex);
    r = std::min(r, 0.49 * non_adjacent);
    if (auto it = options.cutoff_radius.find(j); it != options.cutoff_radius.end()) {
      r = it->second;
      if (!(r > 0.0)) throw GeometryError("cut-off radius override must be positive");
      if (!(2.0 * r < adjacent) || !(2.0 * r < non_adjacent))
        throw GeometryError("cut-off radius override at corner " + std::to_string(j) +
                            " makes N_j leave the domain");
    }
    dom.corners_[j].cutoff_radius = r;
  }
  for (const auto& [j, r] : options.cutoff_radius)
    if (j < 0 || j >= n) throw GeometryError("cut-off override for unknown corner");
  for (int i = 0; i < n; ++i)
    for (int k = i + 1; k < n; ++k)
      if (!(2.0 * dom.corners_[i].cutoff_radius + 2.0 * dom.corners_[k].cutoff_radius <
            distance(dom.vertices_[i], dom.vertices_[k])))
        throw GeometryError("cut-off disks around corners " + std::to_string(i) + " and " +
                            std::to_string(k) + " overlap");
  return dom;
}

inline double PolygonalDomain::perimeter() const {
  double p = 0.0;
  for (int j = 0; j < size(); ++j) p += side_length(j);
  return p;
}

inline double PolygonalDomain::diameter() const {
  double d = 0.0;
  for (const Point& a : vertices_)
    for (const Point& b : vertices_) d = std::max(d, distance(a, b));
  return d;
}

inline bool PolygonalDomain::contains(Point p, double tol) const {
  const double scale = diameter();
  for (int j = 0; j < size(); ++j)
    if (distance_to_segment(p, side_start(j), side_end(j)) <= tol * scale) return true;
  // Winding number.
  int wn = 0;
  for (int j = 0; j < size(); ++j) {
    const Point a = side_start(j), b = side_end(j);
    if (a.y <= p.y) {
      if (b.y > p.y && orient(a, b, p) > 0) ++wn;
    } else if (b.y <= p.y && orient(a, b, p) < 0) {
      --wn;
    }
  }
  return wn != 0;
}

inline double PolygonalDomain::distance_to_boundary(Point p) const {
  double d = std::numeric_limits<double>::infinity();
  for (int j = 0; j < size(); ++j) d = std::min(d, distance_to_segment(p, side_start(j), side_end(j)));
  return d;
}

inline std::optional<double> PolygonalDomain::min_lambda() const {
  std::optional<double> m;
  for (const CornerData& c : corners_)
    if (!c.smooth) m = m ? std::min(*m, c.lambda) : c.lambda;
  return m;
}

inline std::optional<LocalPolar> PolygonalDomain::try_local_polar(int j, Point p, double tol) const {
  const CornerData& c = corner(j);
  const Point d = p - c.position;
  const double r = norm(d);
  if (r == 0.0) return LocalPolar{0.0, 0.0};
  const Point e1 = side_direction(j);
  const Point e0 = (-1.0) * side_direction(j - 1);
  if (std::abs(cross(e1, d)) <= tol * r && dot(e1, d) > 0.0) return LocalPolar{r, 0.0};
  if (std::abs(cross(e0, d)) <= tol * r && dot(e0, d) > 0.0) return LocalPolar{r, c.angle};
  double theta = std::atan2(cross(e1, d), dot(e1, d));
  if (theta < 0.0) theta += 2.0 * pi;
  if (theta > c.angle + tol) {
    if (theta > 2.0 * pi - tol) return LocalPolar{r, 0.0};
    return std::nullopt;
  }
  return LocalPolar{r, std::min(theta, c.angle)};
}

inline LocalPolar PolygonalDomain::local_polar(int j, Point p) const {
  auto lp = try_local_polar(j, p);
  if (!lp)
    throw GeometryError("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                        ") lies outside the wedge of corner " + std::to_string(j));
  return *lp;
}

inline double PolygonalDomain::cutoff_derivative(int j, double r, int order) const {
  const double R = corner(j).cutoff_radius;
  if (r <= R || r >= 2.0 * R) return order == 0 ? (r <= R ? 1.0 : 0.0) : 0.0;
  // Quintic smoothstep s(t) = 10t^3 - 15t^4 + 6t^5 on t = (r - R) / R.
  const double t = (r - R) / R;
  switch (order) {
    case 0: return 1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
    case 1: return -30.0 * t * t * (1.0 - t) * (1.0 - t) / R;
    case 2: return -60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (R * R);
    default: throw Error("cut-off derivative order must be 0, 1 or 2");
  }
}

inline double PolygonalDomain::cutoff(int j, double r) const { return cutoff_derivative(j, r, 0); }

// ---------------------------------------------------------------------------
// Free-function interface.

inline PolygonalDomain build_domain(std::vector<Point> vertices, const DomainOptions& options = {}) {
  return PolygonalDomain::build(std::move(vertices), options);
}

inline LocalPolar local_polar(const PolygonalDomain& d, int j, Point p) { return d.local_polar(j, p); }

inline double cutoff(const PolygonalDomain& d, int j, double r) { return d.cutoff(j, r); }

inline PolygonalDomain unit_square() {
  DomainOptions o;
  o.name = "unit-square";
  return build_domain({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, o);
}

/// (-1,1)^2 minus [0,1) x (-1,0]; the re-entrant corner is vertex 2.
inline PolygonalDomain l_shape() {
  DomainOptions o;
  o.name = "l-shape";
  return build_domain({{-1, -1}, {0, -1}, {0, 0}, {1, 0}, {1, 1}, {-1, 1}}, o);
}

/// Chordal approximation of the unit circular sector {0 < r < 1, 0 < theta < omega}.
/// Vertex 0 is the apex; the n_arc - 1 interior arc vertices are flagged smooth.
inline PolygonalDomain sector(double omega, int n_arc) {
  if (!(omega > 0.0 && omega < 2.0 * pi)) throw GeometryError("sector angle must be in (0, 2pi)");
  if (n_arc < 2) throw GeometryError("sector needs at least two arc chords");
  std::vector<Point> v{{0.0, 0.0}};
  DomainOptions opts;
  char buf[64];
  std::snprintf(buf, sizeof buf, "sector(%.10g,%d)", omega, n_arc);
  opts.name = buf;
  for (int k = 0; k <= n_arc; ++k) {
    const double t = omega * k / n_arc;
    v.push_back({std::cos(t), std::sin(t)});
    if (k > 0 && k < n_arc) opts.smooth_vertices.push_back(k + 1);
  }
  // Snap the arc endpoints on the axes exactly.
  for (Point& p : v) {
    if (std::abs(p.x) < 1e-15) p.x = 0.0;
    if (std::abs(p.y) < 1e-15) p.y = 0.0;
  }
  return build_domain(std::move(v), opts);
}

/// J^m_p: corners with 0 < m lambda_j < 2 - 2/p. Smooth vertices never belong.
inline CornerSet singular_sets(const PolygonalDomain& d, double p, int m) {
  if (!(p > 1.0) || !std::isfinite(p)) throw GeometryError("integrability exponent must satisfy 1 < p < inf");
  for (const CornerData& c : d.corners()) {
    if (c.smooth) continue;
    const double q = 2.0 * (p - 1.0) / (p * c.lambda);
    if (near_integer(q))
      throw GeometryError("p = " + std::to_string(p) + " is exceptional at corner " +
                          std::to_string(c.index) + " (2(p-1)/(p lambda) is an integer); perturb p");
  }
  CornerSet out;
  const double bound = 2.0 - 2.0 / p;
  for (const CornerData& c : d.corners())
    if (!c.smooth && m * c.lambda > 0.0 && m * c.lambda < bound) out.push_back(c.index);
  return out;
}

inline SobolevExponents sobolev_exponents(const PolygonalDomain& d) {
  SobolevExponents e;
  const auto lam = d.min_lambda();
  if (!lam) return e;
  const double l1 = *lam;
  e.p_omega = l1 >= 2.0 ? Extended::infinity() : Extended::finite(2.0 / (2.0 - l1));
  e.t_omega = Extended::finite(1.0 + l1);
  e.p_dirichlet = l1 >= 1.0 ? Extended::infinity() : Extended::finite(2.0 / (1.0 - l1));
  return e;
}

/// Largest p with p <= s* and p < 2/(2 - m lambda_j) for j in H^m, the strict
/// inequalities realized by a 1e-6 margin.
inline double admissible_p(const PolygonalDomain& d, double s_star, const ModeSets& h_sets) {
  if (!(s_star >= 2.0)) throw GeometryError("s* must be at least 2");
  double p = s_star;
  for (int m = 1; m <= 3; ++m)
    for (int j : h_sets[m]) {
      const double ml = m * d.corner(j).lambda;
      if (ml >= 2.0) continue;
      p = std::min(p, 2.0 / (2.0 - ml) - 1e-6);
    }
  return p;
}

/// Jump function: +1 on side j, -1 on side j-1, undefined at the corner itself.
inline int jump_chi(const PolygonalDomain& d, int j, Point p, double tol = 1e-12) {
  const double scale = d.diameter();
  const Point x = d.vertex(j);
  if (distance(p, x) <= tol * scale)
    throw GeometryError("jump function is undefined at corner " + std::to_string(j));
  if (distance_to_segment(p, d.side_start(j), d.side_end(j)) <= tol * scale) return 1;
  if (distance_to_segment(p, d.side_start(j - 1), d.side_end(j - 1)) <= tol * scale) return -1;
  throw GeometryError("point is on neither side adjacent to corner " + std::to_string(j));
}

inline void check_mode(int m) {
  if (m < 1 || m > 3) throw GeometryError("singular mode must be 1, 2 or 3");
}

/// xi_j r^{m lambda} sin(m lambda theta); zero outside the wedge support.
inline double eval_singular_volume(const PolygonalDomain& d, int j, int m, Point p) {
  check_mode(m);
  const CornerData& c = d.corner(j);
  const double r = distance(p, c.position);
  if (r >= 2.0 * c.cutoff_radius || r == 0.0) return 0.0;
  const auto lp = d.try_local_polar(j, p);
  if (!lp) return 0.0;
  const double a = m * c.lambda;
  return d.cutoff(j, r) * std::pow(r, a) * std::sin(a * lp->theta);
}

/// Laplacian of xi_j(r) r^alpha g(theta) for a harmonic r^alpha g(theta):
/// (xi'' + xi'/r) r^alpha g + 2 xi' alpha r^{alpha-1} g.
inline double cutoff_harmonic_laplacian(const PolygonalDomain& d, int j, double r, double alpha,
                                        double g_theta) {
  if (r <= 0.0) return 0.0;
  const double x1 = d.cutoff_derivative(j, r, 1);
  const double x2 = d.cutoff_derivative(j, r, 2);
  if (x1 == 0.0 && x2 == 0.0) return 0.0;
  return (x2 + x1 / r) * std::pow(r, alpha) * g_theta + 2.0 * x1 * alpha * std::pow(r, alpha - 1.0) * g_theta;
}

/// Outward normal derivative of the singular function on the sides of corner j
/// where the cut-off is identically one.
inline double singular_normal_derivative(const PolygonalDomain& d, int j, int m, double r,
                                         CornerSide side) {
  check_mode(m);
  const CornerData& c = d.corner(j);
  if (!(r > 0.0)) throw GeometryError("normal derivative needs r > 0");
  if (!(r < c.cutoff_radius))
    throw GeometryError("normal derivative formula only valid for r < R_j");
  const double a = m * c.lambda;
  const double mag = a * std::pow(r, a - 1.0);
  if (side == CornerSide::outgoing) return -mag;
  return (m % 2 == 0 ? 1.0 : -1.0) * mag;
}

/// Angular profile of the wedge solution with boundary data r^eta (n odd) or
/// chi r^eta (n even):
/// s(theta) = [((-1)^{n+1} - cos(eta omega)) / sin(eta omega)] sin(eta theta) + cos(eta theta).
inline double eval_s_profile(double omega, int n, double eta, double theta) {
  const double s = std::sin(eta * omega);
  if (std::abs(s) <= 1e-12)
    throw GeometryError("resonant exponent: sin(eta * omega) = 0");
  const double sign = (n % 2 == 1) ? 1.0 : -1.0;  // (-1)^{n+1}
  return (sign - std::cos(eta * omega)) / s * std::sin(eta * theta) + std::cos(eta * theta);
}

inline double eval_s_profile(const PolygonalDomain& d, int j, int n, double eta, double theta) {
  return eval_s_profile(d.corner(j).angle, n, eta, theta);
}

inline bool zero_in_bounds(double a, double b) { return a <= 0.0 && 0.0 <= b; }

/// a_{j,m}: -m lambda c / nu when 0 is an admissible control value, else 0.
inline double control_singular_coefficient(double c_hat, int m, double lambda, double nu, double a,
                                           double b) {
  if (!(nu > 0.0)) throw Error("regularization weight must be positive");
  if (!zero_in_bounds(a, b)) return 0.0;
  return -m * lambda * c_hat / nu;
}

/// One singular term attached to a corner.
struct SingularTermSpec {
  enum class Kind { volume, boundary_trace };
  int corner = 0;
  int mode = 1;
  double coefficient = 1.0;
  Kind kind = Kind::volume;
  bool with_jump = false;  // boundary-trace kind only

  /// Volume kind: coefficient * xi r^{m lambda} sin(m lambda theta).
  /// Boundary kind: coefficient * xi r^{m lambda - 1} (times chi_j if requested),
  /// evaluated at a boundary point on a side adjacent to the corner.
  double evaluate(const PolygonalDomain& d, Point p) const {
    if (kind == Kind::volume) return coefficient * eval_singular_volume(d, corner, mode, p);
    const CornerData& c = d.corner(corner);
    const double r = distance(p, c.position);
    if (r == 0.0 || r >= 2.0 * c.cutoff_radius) return 0.0;
    double v = coefficient * d.cutoff(corner, r) * std::pow(r, mode * c.lambda - 1.0);
    if (with_jump) v *= jump_chi(d, corner, p);
    return v;
  }
};

/// Singular boundary data of the form sum a xi r^eta + sum chi a xi r^eta.
struct SingularBoundaryData {
  struct Term {
    int corner = 0;
    double eta = 0.0;
    double amplitude = 0.0;
  };
  std::vector<Term> non_jump;  // n = 1
  std::vector<Term> jump;      // n = 2

  void validate(const PolygonalDomain& d) const {
    auto check = [&](const Term& t, double lower, const char* what) {
      if (t.corner < 0 || t.corner >= d.size()) throw GeometryError("corner index out of range");
      if (!(t.eta > lower)) throw GeometryError(std::string(what) + " exponent below its lower bound");
      if (near_integer(t.eta / d.corner(t.corner).lambda))
        throw GeometryError("resonant exponent: eta / lambda is an integer at corner " +
                            std::to_string(t.corner));
    };
    for (const Term& t : non_jump) check(t, -0.5, "non-jump");
    for (const Term& t : jump) check(t, 0.0, "jump");
  }

  /// Value of the boundary datum at boundary point p.
  double boundary_value(const PolygonalDomain& d, Point p) const {
    double v = 0.0;
    auto add = [&](const Term& t, bool with_jump) {
      const CornerData& c = d.corner(t.corner);
      const double r = distance(p, c.position);
      if (r >= 2.0 * c.cutoff_radius) return;
      if (r == 0.0) {
        if (t.eta > 0.0) return;
        throw GeometryError("singular boundary datum evaluated at its corner");
      }
      double term = t.amplitude * d.cutoff(t.corner, r) * std::pow(r, t.eta);
      if (with_jump) term *= jump_chi(d, t.corner, p);
      v += term;
    };
    for (const Term& t : non_jump) add(t, false);
    for (const Term& t : jump) add(t, true);
    return v;
  }
};

}  // namespace dclab
