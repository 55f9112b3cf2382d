#pragma once

// Triangle quadrature, target functions (possibly discontinuous along a line)
// and their P1 load vectors, plus L2 / H1-seminorm error norms.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"
#include "mesh.hpp"

namespace dclab {

struct QuadraturePoint {
  std::array<double, 3> bary;
  double weight;  // weights sum to 1; multiply by the triangle area
};

/// Degree-2 rule with interior points.
inline const std::vector<QuadraturePoint>& rule3() {
  static const std::vector<QuadraturePoint> r{
      {{2.0 / 3, 1.0 / 6, 1.0 / 6}, 1.0 / 3},
      {{1.0 / 6, 2.0 / 3, 1.0 / 6}, 1.0 / 3},
      {{1.0 / 6, 1.0 / 6, 2.0 / 3}, 1.0 / 3},
  };
  return r;
}

/// Degree-5 seven-point rule.
inline const std::vector<QuadraturePoint>& rule7() {
  static const std::vector<QuadraturePoint> r = [] {
    const double a1 = 0.059715871789769820, b1 = 0.470142064105115090;
    const double a2 = 0.797426985353087322, b2 = 0.101286507323456339;
    const double w0 = 0.225, w1 = 0.132394152788506181, w2 = 0.125939180544827153;
    return std::vector<QuadraturePoint>{
        {{1.0 / 3, 1.0 / 3, 1.0 / 3}, w0},
        {{a1, b1, b1}, w1}, {{b1, a1, b1}, w1}, {{b1, b1, a1}, w1},
        {{a2, b2, b2}, w2}, {{b2, a2, b2}, w2}, {{b2, b2, a2}, w2},
    };
  }();
  return r;
}

inline Point bary_point(const std::array<Point, 3>& v, const std::array<double, 3>& b) {
  return b[0] * v[0] + b[1] * v[1] + b[2] * v[2];
}

/// Barycentric coordinates of p with respect to triangle v.
inline std::array<double, 3> barycentric(const std::array<Point, 3>& v, Point p) {
  const double A = orient(v[0], v[1], v[2]);
  const double l0 = orient(p, v[1], v[2]) / A;
  const double l1 = orient(v[0], p, v[2]) / A;
  return {l0, l1, 1.0 - l0 - l1};
}

/// The line through `point` with direction `direction`.
struct DiscontinuityLine {
  Point point;
  Point direction;
  double side(Point x) const { return cross(direction, x - point); }
};

/// Desired state y_Omega.
struct TargetFunction {
  std::function<double(Point)> eval;
  std::optional<DiscontinuityLine> jump;
  std::string description;

  double operator()(Point x) const { return eval(x); }

  static TargetFunction constant(double c) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "constant %.10g", c);
    return {[c](Point) { return c; }, std::nullopt, buf};
  }

  /// +1 for theta_j < omega_j / 2 and -1 beyond, measured at corner j.
  static TargetFunction skew(const PolygonalDomain& d, int j) {
    const CornerData& c = d.corner(j);
    const double half = 0.5 * c.angle;
    const Point e1 = d.side_direction(j);
    const Point dir{std::cos(half) * e1.x - std::sin(half) * e1.y,
                    std::sin(half) * e1.x + std::cos(half) * e1.y};
    const Point apex = c.position;
    TargetFunction t;
    t.eval = [apex, dir](Point x) { return cross(dir, x - apex) < 0.0 ? 1.0 : -1.0; };
    t.jump = DiscontinuityLine{apex, dir};
    t.description = "skew about the bisector of corner " + std::to_string(j);
    return t;
  }

  /// Piecewise-constant field read from a CSV of `x,y,value` rows (header
  /// optional); each point takes the value of the nearest sample.
  static TargetFunction from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open target file " + path);
    auto samples = std::make_shared<std::vector<std::array<double, 3>>>();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      for (char& ch : line)
        if (ch == ',') ch = ' ';
      std::istringstream ss(line);
      std::array<double, 3> s{};
      if (!(ss >> s[0] >> s[1] >> s[2])) {
        if (lineno == 1) continue;
        throw ConfigError(path + ":" + std::to_string(lineno) + ": expected x,y,value");
      }
      samples->push_back(s);
    }
    if (samples->empty()) throw ConfigError("target file " + path + " has no samples");
    TargetFunction t;
    t.eval = [samples](Point x) {
      double best = std::numeric_limits<double>::infinity(), v = 0.0;
      for (const auto& s : *samples) {
        const double d2 = (s[0] - x.x) * (s[0] - x.x) + (s[1] - x.y) * (s[1] - x.y);
        if (d2 < best) best = d2, v = s[2];
      }
      return v;
    };
    t.description = "custom:" + path;
    return t;
  }
};

namespace detail {

/// Calls fn(bary-in-parent, weight * area) over the quadrature points of the
/// pieces of triangle v cut by `line`.
template <class Fn>
void integrate_split(const std::array<Point, 3>& v, const DiscontinuityLine& line,
                     const std::vector<QuadraturePoint>& rule, Fn&& fn) {
  std::array<double, 3> s{};
  for (int k = 0; k < 3; ++k) s[k] = line.side(v[k]);
  const double scale = norm(line.direction) * (distance(v[0], v[1]) + distance(v[1], v[2]));
  for (double& x : s)
    if (std::abs(x) <= 1e-14 * scale) x = 0.0;
  const bool pos = s[0] > 0 || s[1] > 0 || s[2] > 0;
  const bool neg = s[0] < 0 || s[1] < 0 || s[2] < 0;
  auto piece = [&](const std::array<Point, 3>& t) {
    const double area = 0.5 * std::abs(orient(t[0], t[1], t[2]));
    if (area == 0.0) return;
    for (const auto& q : rule) fn(barycentric(v, bary_point(t, q.bary)), q.weight * area);
  };
  if (!(pos && neg)) {
    piece(v);
    return;
  }
  // Collect the polygon on each side, inserting crossing points.
  std::vector<Point> P, N;
  for (int k = 0; k < 3; ++k) {
    const int l = (k + 1) % 3;
    if (s[k] >= 0) P.push_back(v[k]);
    if (s[k] <= 0) N.push_back(v[k]);
    if ((s[k] > 0 && s[l] < 0) || (s[k] < 0 && s[l] > 0)) {
      const double t = s[k] / (s[k] - s[l]);
      const Point x = v[k] + t * (v[l] - v[k]);
      P.push_back(x);
      N.push_back(x);
    }
  }
  for (const auto* poly : {&P, &N})
    for (std::size_t k = 1; k + 1 < poly->size(); ++k) piece({(*poly)[0], (*poly)[k], (*poly)[k + 1]});
}

template <class Fn>
void integrate_triangle(const std::array<Point, 3>& v, const TargetFunction& f, Fn&& fn) {
  if (f.jump) {
    integrate_split(v, *f.jump, rule7(), fn);
    return;
  }
  const double area = 0.5 * orient(v[0], v[1], v[2]);
  for (const auto& q : rule3()) fn(q.bary, q.weight * area);
}

inline std::array<Point, 3> tri_points(const TriMesh& m, int t) {
  const auto& tr = m.triangles[t];
  return {m.nodes[tr[0]], m.nodes[tr[1]], m.nodes[tr[2]]};
}

}  // namespace detail

/// Load vector b_i = integral of f phi_i and c = integral of f^2, both with
/// the same quadrature.
struct TargetLoad {
  Eigen::VectorXd b;
  double c = 0.0;
};

inline TargetLoad assemble_target(const TriMesh& m, const TargetFunction& f) {
  TargetLoad out;
  out.b = Eigen::VectorXd::Zero(m.num_nodes());
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto v = detail::tri_points(m, t);
    const auto& tr = m.triangles[t];
    detail::integrate_triangle(v, f, [&](const std::array<double, 3>& b, double w) {
      const double val = f(bary_point(v, b));
      for (int k = 0; k < 3; ++k) out.b[tr[k]] += w * val * b[k];
      out.c += w * val * val;
    });
  }
  return out;
}

inline Eigen::VectorXd interpolate(const TriMesh& m, const std::function<double(Point)>& f) {
  Eigen::VectorXd v(m.num_nodes());
  for (int i = 0; i < m.num_nodes(); ++i) v[i] = f(m.nodes[i]);
  return v;
}

/// L2 norm of (u_h - u) with the seven-point rule.
inline double l2_error(const TriMesh& m, const Eigen::VectorXd& uh, const std::function<double(Point)>& u) {
  double e = 0.0;
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto v = detail::tri_points(m, t);
    const auto& tr = m.triangles[t];
    const double area = m.area(t);
    for (const auto& q : rule7()) {
      const double fh = q.bary[0] * uh[tr[0]] + q.bary[1] * uh[tr[1]] + q.bary[2] * uh[tr[2]];
      const double d = fh - u(bary_point(v, q.bary));
      e += q.weight * area * d * d;
    }
  }
  return std::sqrt(e);
}

/// H1 seminorm of (u_h - u). Elements touching `singular_point` are
/// subdivided recursively toward it so that unbounded gradients are integrated
/// accurately.
inline double h1_seminorm_error(const TriMesh& m, const Eigen::VectorXd& uh,
                                const std::function<Point(Point)>& grad_u,
                                std::optional<Point> singular_point = std::nullopt, int depth = 12) {
  double e = 0.0;
  std::function<void(const std::array<Point, 3>&, Point, int)> rec;
  rec = [&](const std::array<Point, 3>& v, Point gh, int level) {
    int at = -1;
    if (singular_point)
      for (int k = 0; k < 3; ++k)
        if (v[k] == *singular_point) at = k;
    if (at >= 0 && level > 0) {
      const Point m01 = 0.5 * (v[0] + v[1]), m12 = 0.5 * (v[1] + v[2]), m20 = 0.5 * (v[2] + v[0]);
      const std::array<std::array<Point, 3>, 4> kids{{{v[0], m01, m20}, {m01, v[1], m12}, {m20, m12, v[2]}, {m01, m12, m20}}};
      for (const auto& kid : kids) rec(kid, gh, level - 1);
      return;
    }
    const double area = 0.5 * orient(v[0], v[1], v[2]);
    for (const auto& q : rule7()) {
      const Point d = gh - grad_u(bary_point(v, q.bary));
      e += q.weight * area * dot(d, d);
    }
  };
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto v = detail::tri_points(m, t);
    const auto& tr = m.triangles[t];
    const double A2 = orient(v[0], v[1], v[2]);
    Point g{0, 0};
    for (int k = 0; k < 3; ++k) {
      const Point a = v[(k + 1) % 3], b = v[(k + 2) % 3];
      g = g + (uh[tr[k]] / A2) * Point{a.y - b.y, b.x - a.x};
    }
    rec(v, g, depth);
  }
  return std::sqrt(e);
}

}  // namespace dclab
