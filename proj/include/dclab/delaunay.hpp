#pragma once

// Conforming Delaunay refinement of a simple polygon (Bowyer-Watson insertion
// with Ruppert-style quality refinement). Boundary segments are recovered by
// midpoint splitting and then protected: cavities never cross them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"

namespace dclab::detail {

/// Positive when d lies strictly inside the circumcircle of the
/// counterclockwise triangle abc.
inline double incircle(Point a, Point b, Point c, Point d) {
  const long double adx = (long double)a.x - d.x, ady = (long double)a.y - d.y;
  const long double bdx = (long double)b.x - d.x, bdy = (long double)b.y - d.y;
  const long double cdx = (long double)c.x - d.x, cdy = (long double)c.y - d.y;
  const long double al = adx * adx + ady * ady;
  const long double bl = bdx * bdx + bdy * bdy;
  const long double cl = cdx * cdx + cdy * cdy;
  return static_cast<double>(al * (bdx * cdy - bdy * cdx) + bl * (cdx * ady - cdy * adx) +
                             cl * (adx * bdy - ady * bdx));
}

inline Point circumcenter(Point a, Point b, Point c) {
  const double bx = b.x - a.x, by = b.y - a.y, cx = c.x - a.x, cy = c.y - a.y;
  const double d = 2.0 * (bx * cy - by * cx);
  const double b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
  return {a.x + (cy * b2 - by * c2) / d, a.y + (bx * c2 - cx * b2) / d};
}

/// Smallest interior angle of a triangle, in radians.
inline double min_angle(Point a, Point b, Point c) {
  auto ang = [](Point p, Point q, Point r) {
    const Point u = q - p, v = r - p;
    return std::atan2(std::abs(cross(u, v)), dot(u, v));
  };
  return std::min({ang(a, b, c), ang(b, c, a), ang(c, a, b)});
}

struct RawMesh {
  std::vector<Point> nodes;
  std::vector<std::array<int, 3>> triangles;
};

struct RefineParams {
  double min_angle_deg = 20.5;
  std::function<double(Point)> size;  // target edge length
  std::size_t max_points = 6'000'000;
};

class DelaunayRefiner {
public:
  /// `boundary` lists the polygon boundary points in counterclockwise cyclic order.
  RawMesh run(const std::vector<Point>& boundary, const RefineParams& params) {
    params_ = params;
    init_super(boundary);
    for (const Point& p : boundary) {
      const int t = locate(p, hint_);
      commit(p, cavity(p, {t}), std::nullopt);
    }
    recover_segments(boundary.size());
    classify();
    refine();
    return extract();
  }

private:
  struct Tri {
    std::array<int, 3> v{};
    std::array<int, 3> nb{-1, -1, -1};  // nb[i] is across the edge opposite v[i]
    std::array<bool, 3> seg{};
    bool alive = true;
    bool inside = false;
    std::uint32_t stamp = 0;
  };
  struct BoundaryEdge {
    int a, b, outer;
    bool seg, inside;
  };
  struct Cavity {
    std::vector<int> tris;
    std::vector<BoundaryEdge> edges;
  };
  using Seg = std::pair<int, int>;

  RefineParams params_;
  std::vector<Point> P_;
  std::vector<Tri> T_;
  std::vector<int> free_;
  std::vector<int> vtri_;
  std::vector<std::uint32_t> mark_;
  std::uint32_t epoch_ = 0;
  int hint_ = 0;
  std::deque<std::pair<int, std::uint32_t>> tri_queue_;
  std::deque<Seg> seg_queue_;

  Point pt(int t, int k) const { return P_[T_[t].v[k]]; }

  int new_tri(int a, int b, int c) {
    int id;
    if (!free_.empty()) {
      id = free_.back();
      free_.pop_back();
      const std::uint32_t s = T_[id].stamp + 1;
      T_[id] = Tri{};
      T_[id].stamp = s;
      mark_[id] = 0;
    } else {
      id = static_cast<int>(T_.size());
      T_.push_back({});
      mark_.push_back(0);
    }
    T_[id].v = {a, b, c};
    return id;
  }

  void init_super(const std::vector<Point>& boundary) {
    Point lo = boundary.front(), hi = boundary.front();
    for (const Point& p : boundary) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    const Point c = 0.5 * (lo + hi);
    const double D = std::max(hi.x - lo.x, hi.y - lo.y);
    P_ = {{c.x - 30 * D, c.y - 20 * D}, {c.x + 30 * D, c.y - 20 * D}, {c.x, c.y + 30 * D}};
    vtri_ = {0, 0, 0};
    new_tri(0, 1, 2);
    hint_ = 0;
  }

  int locate(Point p, int t) const {
    if (t < 0 || t >= static_cast<int>(T_.size()) || !T_[t].alive) t = any_alive();
    const std::size_t limit = 4 * T_.size() + 100;
    for (std::size_t step = 0; step < limit; ++step) {
      bool moved = false;
      for (int k = 0; k < 3; ++k) {
        const int e = static_cast<int>((k + step) % 3);
        if (orient(pt(t, (e + 1) % 3), pt(t, (e + 2) % 3), p) < 0.0) {
          t = T_[t].nb[e];
          if (t < 0) throw MeshError("point location left the triangulation");
          moved = true;
          break;
        }
      }
      if (!moved) return t;
    }
    for (int i = 0; i < static_cast<int>(T_.size()); ++i) {
      if (!T_[i].alive) continue;
      if (orient(pt(i, 0), pt(i, 1), p) >= 0 && orient(pt(i, 1), pt(i, 2), p) >= 0 &&
          orient(pt(i, 2), pt(i, 0), p) >= 0)
        return i;
    }
    throw MeshError("point location failed");
  }

  int any_alive() const {
    for (int i = static_cast<int>(T_.size()) - 1; i >= 0; --i)
      if (T_[i].alive) return i;
    throw MeshError("empty triangulation");
  }

  Cavity cavity(Point p, std::vector<int> start) {
    Cavity cav;
    for (;;) {
      ++epoch_;
      cav.tris.clear();
      for (int t : start) {
        if (mark_[t] == epoch_) continue;
        mark_[t] = epoch_;
        cav.tris.push_back(t);
      }
      for (std::size_t i = 0; i < cav.tris.size(); ++i) {
        const Tri& tr = T_[cav.tris[i]];
        for (int e = 0; e < 3; ++e) {
          const int n = tr.nb[e];
          if (n < 0 || tr.seg[e] || mark_[n] == epoch_) continue;
          if (incircle(pt(n, 0), pt(n, 1), pt(n, 2), p) > 0.0) {
            mark_[n] = epoch_;
            cav.tris.push_back(n);
          }
        }
      }
      cav.edges.clear();
      int grow = -1;
      for (int t : cav.tris) {
        const Tri& tr = T_[t];
        for (int e = 0; e < 3; ++e) {
          const int n = tr.nb[e];
          if (n >= 0 && mark_[n] == epoch_) continue;
          const int a = tr.v[(e + 1) % 3], b = tr.v[(e + 2) % 3];
          if (orient(P_[a], P_[b], p) <= 0.0 && n >= 0 && !tr.seg[e]) grow = n;
          cav.edges.push_back({a, b, n, tr.seg[e], tr.inside});
        }
      }
      if (grow < 0) return cav;
      // p sits on (or numerically beyond) a cavity edge: absorb the neighbour.
      start = cav.tris;
      start.push_back(grow);
    }
  }

  /// True when p is on the wrong side of, or on, a protected cavity edge.
  bool cavity_blocked(const Cavity& cav, Point p) const {
    for (const BoundaryEdge& e : cav.edges)
      if (orient(P_[e.a], P_[e.b], p) <= 0.0) return true;
    return false;
  }

  std::vector<int> commit(Point p, const Cavity& cav, std::optional<Seg> split) {
    const int vid = static_cast<int>(P_.size());
    P_.push_back(p);
    vtri_.push_back(-1);
    for (int t : cav.tris) {
      T_[t].alive = false;
      free_.push_back(t);
    }
    std::vector<int> made;
    made.reserve(cav.edges.size());
    std::vector<std::pair<int, int>> by_start;
    by_start.reserve(cav.edges.size());
    for (const BoundaryEdge& e : cav.edges) {
      const int t = new_tri(e.a, e.b, vid);
      Tri& tr = T_[t];
      tr.nb[2] = e.outer;
      tr.seg[2] = e.seg;
      tr.inside = e.inside;
      if (split) {
        if (e.b == split->first || e.b == split->second) tr.seg[0] = true;
        if (e.a == split->first || e.a == split->second) tr.seg[1] = true;
      }
      if (e.outer >= 0) {
        Tri& o = T_[e.outer];
        for (int k = 0; k < 3; ++k)
          if (o.v[(k + 1) % 3] == e.b && o.v[(k + 2) % 3] == e.a) o.nb[k] = t;
      }
      vtri_[e.a] = vtri_[e.b] = vtri_[vid] = t;
      made.push_back(t);
      by_start.push_back({e.a, t});
    }
    std::sort(by_start.begin(), by_start.end());
    auto starting_at = [&](int a) {
      auto it = std::lower_bound(by_start.begin(), by_start.end(), std::make_pair(a, -1));
      if (it == by_start.end() || it->first != a) throw MeshError("cavity boundary is not a loop");
      return it->second;
    };
    for (int t : made) {
      const int nxt = starting_at(T_[t].v[1]);
      T_[t].nb[0] = nxt;
      T_[nxt].nb[1] = t;
    }
    hint_ = made.front();
    return made;
  }

  /// Triangle containing edge (a, b) with that orientation, and the index of
  /// the opposite vertex; nullopt when the edge is absent.
  std::optional<std::pair<int, int>> find_edge(int a, int b) const {
    const int start = vtri_[a];
    for (int dir = 0; dir < 2; ++dir) {
      int t = start;
      do {
        const Tri& tr = T_[t];
        int k = 0;
        while (tr.v[k] != a) ++k;
        if (tr.v[(k + 1) % 3] == b) return std::make_pair(t, (k + 2) % 3);
        if (tr.v[(k + 2) % 3] == b) {
          const int n = tr.nb[(k + 1) % 3];
          if (n < 0) return std::nullopt;
          const Tri& o = T_[n];
          for (int e = 0; e < 3; ++e)
            if (o.v[(e + 1) % 3] == a && o.v[(e + 2) % 3] == b) return std::make_pair(n, e);
          return std::nullopt;
        }
        t = dir == 0 ? tr.nb[(k + 1) % 3] : tr.nb[(k + 2) % 3];
      } while (t >= 0 && t != start);
      if (t == start) break;
    }
    return std::nullopt;
  }

  void recover_segments(std::size_t n_boundary) {
    std::vector<int> loop(n_boundary);
    for (std::size_t i = 0; i < n_boundary; ++i) loop[i] = static_cast<int>(i) + 3;
    for (;;) {
      std::vector<int> next;
      bool all = true;
      for (std::size_t i = 0; i < loop.size(); ++i) {
        const int a = loop[i], b = loop[(i + 1) % loop.size()];
        next.push_back(a);
        if (find_edge(a, b) || find_edge(b, a)) continue;
        all = false;
        const Point m = 0.5 * (P_[a] + P_[b]);
        const int t = locate(m, vtri_[a]);
        commit(m, cavity(m, {t}), std::nullopt);
        next.push_back(static_cast<int>(P_.size()) - 1);
        if (P_.size() > params_.max_points) throw MeshError("boundary recovery did not terminate");
      }
      loop = std::move(next);
      if (all) break;
    }
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const int a = loop[i], b = loop[(i + 1) % loop.size()];
      protect(a, b);
      seg_queue_.push_back({a, b});
    }
  }

  void protect(int a, int b) {
    for (auto e : {find_edge(a, b), find_edge(b, a)})
      if (e) T_[e->first].seg[e->second] = true;
  }

  void classify() {
    std::vector<char> outside(T_.size(), 0);
    std::vector<int> stack;
    for (int i = 0; i < static_cast<int>(T_.size()); ++i) {
      if (!T_[i].alive) continue;
      for (int k = 0; k < 3; ++k)
        if (T_[i].v[k] < 3) {
          outside[i] = 1;
          stack.push_back(i);
          break;
        }
    }
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      for (int e = 0; e < 3; ++e) {
        const int n = T_[t].nb[e];
        if (n < 0 || T_[t].seg[e] || outside[n]) continue;
        outside[n] = 1;
        stack.push_back(n);
      }
    }
    std::size_t n_inside = 0;
    for (int i = 0; i < static_cast<int>(T_.size()); ++i) {
      if (!T_[i].alive) continue;
      T_[i].inside = !outside[i];
      if (T_[i].inside) {
        ++n_inside;
        tri_queue_.push_back({i, T_[i].stamp});
      }
    }
    if (n_inside == 0) throw MeshError("no triangles inside the polygon");
  }

  bool encroached(int a, int b, int apex) const {
    const Point u = P_[a] - P_[apex], w = P_[b] - P_[apex];
    return dot(u, w) < -1e-12 * (dot(u, u) + dot(w, w));
  }

  /// Split (a, b) at its midpoint if it is still a protected edge.
  bool split_segment(int a, int b) {
    auto e1 = find_edge(a, b);
    if (!e1) e1 = find_edge(b, a);
    if (!e1 || !T_[e1->first].seg[e1->second]) return false;
    const int t1 = e1->first;
    const int t2 = T_[t1].nb[e1->second];
    const Point m = 0.5 * (P_[a] + P_[b]);
    std::vector<int> start{t1};
    if (t2 >= 0) start.push_back(t2);
    // Both sides start in the cavity, so it spans the segment being split.
    Cavity cav = cavity(m, start);
    const auto made = commit(m, cav, Seg{a, b});
    const int mid = static_cast<int>(P_.size()) - 1;
    seg_queue_.push_back({a, mid});
    seg_queue_.push_back({mid, b});
    after_insert(made);
    return true;
  }

  void after_insert(const std::vector<int>& made) {
    for (int t : made) {
      if (T_[t].inside) tri_queue_.push_back({t, T_[t].stamp});
      for (int e = 0; e < 3; ++e)
        if (T_[t].seg[e]) seg_queue_.push_back({T_[t].v[(e + 1) % 3], T_[t].v[(e + 2) % 3]});
    }
    if (P_.size() > params_.max_points)
      throw MeshError("refinement exceeded the point budget; target size unreachable");
  }

  bool segment_encroached(int a, int b) const {
    for (auto e : {find_edge(a, b), find_edge(b, a)}) {
      if (!e) continue;
      const Tri& tr = T_[e->first];
      if (!tr.seg[e->second]) return false;
      if (tr.inside && encroached(a, b, tr.v[e->second])) return true;
    }
    return false;
  }

  bool is_bad(int t) const {
    const Point a = pt(t, 0), b = pt(t, 1), c = pt(t, 2);
    if (min_angle(a, b, c) < params_.min_angle_deg * pi / 180.0) return true;
    const double longest = std::max({distance(a, b), distance(b, c), distance(c, a)});
    return longest > params_.size((1.0 / 3.0) * (a + b + c));
  }

  struct WalkResult {
    int tri = -1;
    std::optional<Seg> blocked;
  };

  /// Straight walk from triangle t toward p that stops at protected edges.
  WalkResult walk(int t, Point p) const {
    const Point q = (1.0 / 3.0) * (pt(t, 0) + pt(t, 1) + pt(t, 2));
    const std::size_t limit = T_.size() + 10;
    for (std::size_t step = 0; step < limit; ++step) {
      int exit = -1;
      for (int e = 0; e < 3; ++e) {
        const Point a = pt(t, (e + 1) % 3), b = pt(t, (e + 2) % 3);
        if (orient(a, b, p) >= 0.0) continue;
        if (exit < 0) exit = e;
        const double oa = orient(q, p, a), ob = orient(q, p, b);
        if ((oa >= 0.0 && ob <= 0.0) || (oa <= 0.0 && ob >= 0.0)) {
          exit = e;
          break;
        }
      }
      if (exit < 0) return {t, std::nullopt};
      const Tri& tr = T_[t];
      if (tr.seg[exit]) return {t, Seg{tr.v[(exit + 1) % 3], tr.v[(exit + 2) % 3]}};
      t = tr.nb[exit];
      if (t < 0) return {-1, std::nullopt};
    }
    return {-1, std::nullopt};
  }

  void refine() {
    for (;;) {
      if (!seg_queue_.empty()) {
        const auto [a, b] = seg_queue_.front();
        seg_queue_.pop_front();
        if (segment_encroached(a, b)) split_segment(a, b);
        continue;
      }
      if (tri_queue_.empty()) break;
      const auto [t, stamp] = tri_queue_.front();
      tri_queue_.pop_front();
      if (!T_[t].alive || T_[t].stamp != stamp || !T_[t].inside || !is_bad(t)) continue;
      const Point c = circumcenter(pt(t, 0), pt(t, 1), pt(t, 2));
      const WalkResult w = walk(t, c);
      if (w.blocked) {
        split_segment(w.blocked->first, w.blocked->second);
        if (T_[t].alive) tri_queue_.push_back({t, T_[t].stamp});
        continue;
      }
      if (w.tri < 0 || !T_[w.tri].inside) continue;
      bool coincident = false;
      for (int k = 0; k < 3; ++k)
        if (distance(pt(w.tri, k), c) < 1e-14 * (1.0 + norm(c))) coincident = true;
      if (coincident) continue;
      Cavity cav = cavity(c, {w.tri});
      std::vector<Seg> hit;
      for (const BoundaryEdge& e : cav.edges) {
        if (!e.seg) continue;
        const Point u = P_[e.a] - c, v = P_[e.b] - c;
        if (dot(u, v) < 0.0 || orient(P_[e.a], P_[e.b], c) <= 0.0) hit.push_back({e.a, e.b});
      }
      if (!hit.empty()) {
        for (const Seg& s : hit) split_segment(s.first, s.second);
        if (T_[t].alive) tri_queue_.push_back({t, T_[t].stamp});
        continue;
      }
      if (cavity_blocked(cav, c)) continue;
      after_insert(commit(c, cav, std::nullopt));
    }
  }

  RawMesh extract() const {
    RawMesh out;
    std::vector<int> id(P_.size(), -1);
    for (const Tri& tr : T_) {
      if (!tr.alive || !tr.inside) continue;
      std::array<int, 3> tri{};
      for (int k = 0; k < 3; ++k) {
        const int v = tr.v[k];
        if (v < 3) throw MeshError("interior triangle touches the bounding triangle");
        if (id[v] < 0) {
          id[v] = static_cast<int>(out.nodes.size());
          out.nodes.push_back(P_[v]);
        }
        tri[k] = id[v];
      }
      out.triangles.push_back(tri);
    }
    return out;
  }
};

}  // namespace dclab::detail
