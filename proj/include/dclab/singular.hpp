#pragma once

// Corner-singularity analysis of computed fields: least-squares extraction of
// singular coefficients, classification of the corner sets where the leading
// coefficient vanishes, flatness of constrained controls, subtraction of the
// predicted singular control terms, wedge solutions for singular boundary
// data, and empirical convergence orders.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "control.hpp"
#include "error.hpp"
#include "fem.hpp"
#include "geometry.hpp"

namespace dclab {

struct ExtractionOptions {
  std::vector<int> modes{1, 2, 3};
  std::optional<double> r1, r2;  // default [R_j / 4, R_j / 2]
  int min_nodes = 30;
  double max_condition = 1e8;
};

struct ExtractionResult {
  int corner = 0;
  double lambda = 0.0;
  std::vector<int> modes;          // modes actually fitted
  std::vector<double> coefficients;  // c_{j,m}, aligned with modes
  double residual = 0.0;           // relative weighted residual of the fit
  double r1 = 0.0, r2 = 0.0;
  int nodes = 0;
  double condition = 0.0;
  std::vector<std::string> warnings;

  /// Coefficient of mode m, or 0 when m was not fitted.
  double coefficient(int m) const {
    for (std::size_t k = 0; k < modes.size(); ++k)
      if (modes[k] == m) return coefficients[k];
    return 0.0;
  }
  bool has_mode(int m) const { return std::find(modes.begin(), modes.end(), m) != modes.end(); }
};

/// Fits phi on the annulus nodes of corner j against the singular modes and a
/// quadratic polynomial background, weighted by the lumped nodal mass.
inline ExtractionResult extract_coefficients(const TriMesh& mesh, const Vec& phi, int j,
                                             const ExtractionOptions& opt = {}) {
  const PolygonalDomain& d = mesh.geometry();
  const CornerData& c = d.corner(j);
  if (c.smooth) throw ExtractionError("corner " + std::to_string(j) + " carries no singularity");
  if (phi.size() != mesh.num_nodes()) throw ExtractionError("field size does not match the mesh");
  ExtractionResult res;
  res.corner = j;
  res.lambda = c.lambda;
  res.r1 = opt.r1.value_or(0.25 * c.cutoff_radius);
  res.r2 = opt.r2.value_or(0.5 * c.cutoff_radius);
  if (!(0.0 < res.r1 && res.r1 < res.r2 && res.r2 < c.cutoff_radius))
    throw ExtractionError("annulus must satisfy 0 < r1 < r2 < R_j");
  for (int m : opt.modes) check_mode(m);

  Vec lumped = Vec::Zero(mesh.num_nodes());
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (int k = 0; k < 3; ++k) lumped[mesh.triangles[t][k]] += mesh.area(t) / 3.0;

  std::vector<int> nodes;
  std::vector<LocalPolar> polar;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const double r = distance(mesh.nodes[i], c.position);
    if (r < res.r1 || r > res.r2) continue;
    auto lp = d.try_local_polar(j, mesh.nodes[i], 1e-9);
    if (!lp) continue;
    nodes.push_back(i);
    polar.push_back(*lp);
  }
  res.nodes = static_cast<int>(nodes.size());
  if (res.nodes < opt.min_nodes)
    throw ExtractionError("annulus [" + std::to_string(res.r1) + ", " + std::to_string(res.r2) +
                          "] at corner " + std::to_string(j) + " holds " + std::to_string(res.nodes) +
                          " nodes; at least " + std::to_string(opt.min_nodes) + " are needed");

  std::vector<int> modes = opt.modes;
  std::sort(modes.begin(), modes.end());
  const Point e1 = d.side_direction(j);
  const Point e2{-e1.y, e1.x};
  const int n_bg = 5;
  for (;;) {
    const int cols = static_cast<int>(modes.size()) + n_bg;
    if (res.nodes < cols) throw ExtractionError("underdetermined extraction fit");
    Eigen::MatrixXd B(res.nodes, cols);
    Vec rhs(res.nodes);
    for (int k = 0; k < res.nodes; ++k) {
      const int i = nodes[k];
      const double w = std::sqrt(lumped[i]);
      const double r = polar[k].r, th = polar[k].theta;
      for (std::size_t q = 0; q < modes.size(); ++q) {
        const double a = modes[q] * c.lambda;
        // Columns scaled by r2^a so that all entries are O(1).
        B(k, q) = w * std::pow(r / res.r2, a) * std::sin(a * th);
      }
      const Point x = mesh.nodes[i] - c.position;
      const double u = dot(x, e1) / res.r2, v = dot(x, e2) / res.r2;
      const int o = static_cast<int>(modes.size());
      B(k, o + 0) = w * u;
      B(k, o + 1) = w * v;
      B(k, o + 2) = w * u * u;
      B(k, o + 3) = w * u * v;
      B(k, o + 4) = w * v * v;
      rhs[k] = w * phi[i];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec sv = svd.singularValues();
    res.condition = sv[sv.size() - 1] > 0 ? sv[0] / sv[sv.size() - 1] : kInf;
    if (res.condition > opt.max_condition && modes.size() > 1) {
      res.warnings.push_back("condition " + std::to_string(res.condition) + " exceeds limit; dropped mode " +
                             std::to_string(modes.back()));
      modes.pop_back();
      continue;
    }
    if (res.condition > opt.max_condition)
      res.warnings.push_back("ill-conditioned fit (condition " + std::to_string(res.condition) + ")");
    const Vec x = svd.solve(rhs);
    res.modes = modes;
    res.coefficients.clear();
    for (std::size_t q = 0; q < modes.size(); ++q)
      res.coefficients.push_back(x[q] / std::pow(res.r2, modes[q] * c.lambda));
    const double nrm = rhs.norm();
    res.residual = nrm > 0.0 ? (B * x - rhs).norm() / nrm : 0.0;
    return res;
  }
}

/// a_{j,m} for every fitted mode.
inline std::vector<double> control_coefficients(const ExtractionResult& e, double nu, double a, double b) {
  std::vector<double> out;
  for (std::size_t q = 0; q < e.modes.size(); ++q)
    out.push_back(control_singular_coefficient(e.coefficients[q], e.modes[q], e.lambda, nu, a, b));
  return out;
}

enum class Membership { member, non_member, undetermined };

inline const char* to_string(Membership m) {
  switch (m) {
    case Membership::member: return "member";
    case Membership::non_member: return "non-member";
    default: return "undetermined";
  }
}

struct HClassification {
  ModeSets sets;                 // determined members only
  std::vector<int> undetermined; // corners whose leading coefficient is too close to the threshold
  double threshold = 0.0;
  std::vector<std::pair<int, Membership>> vanishing;  // per extracted corner: is c_{j,1} = 0
};

/// H^1 = {j in J^1 : lambda_j > 1}; H^m = {j in J^m : c_{j,1} = 0} for m = 2, 3.
/// A leading coefficient counts as zero below `relative_threshold` times the
/// largest extracted coefficient magnitude (all corners, all modes); values
/// within a factor 3 of the threshold are undetermined.
inline HClassification classify_H_sets(const PolygonalDomain& d, double s_star,
                                       const std::vector<ExtractionResult>& extraction,
                                       double relative_threshold = 1e-3) {
  HClassification out;
  const CornerSet J1 = singular_sets(d, s_star, 1);
  for (int j : J1)
    if (d.corner(j).lambda > 1.0) out.sets[1].push_back(j);
  double scale = 0.0;
  for (const auto& e : extraction)
    for (double v : e.coefficients) scale = std::max(scale, std::abs(v));
  out.threshold = relative_threshold * scale;
  for (const auto& e : extraction) {
    if (!e.has_mode(1)) continue;
    const double c1 = std::abs(e.coefficient(1));
    Membership m = Membership::undetermined;
    if (scale == 0.0 || c1 < out.threshold / 3.0) m = Membership::member;
    else if (c1 > 3.0 * out.threshold) m = Membership::non_member;
    out.vanishing.push_back({e.corner, m});
  }
  for (int m = 2; m <= 3; ++m) {
    for (int j : singular_sets(d, s_star, m)) {
      auto it = std::find_if(out.vanishing.begin(), out.vanishing.end(),
                             [j](const auto& p) { return p.first == j; });
      if (it == out.vanishing.end()) throw ExtractionError("no extraction for corner " + std::to_string(j));
      if (it->second == Membership::member) out.sets[m].push_back(j);
      else if (it->second == Membership::undetermined &&
               std::find(out.undetermined.begin(), out.undetermined.end(), j) == out.undetermined.end())
        out.undetermined.push_back(j);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Flatness of constrained controls.

enum class FlatVerdict { flat_at_a, flat_at_b, one_sided, none };

inline const char* to_string(FlatVerdict v) {
  switch (v) {
    case FlatVerdict::flat_at_a: return "flat-at-a";
    case FlatVerdict::flat_at_b: return "flat-at-b";
    case FlatVerdict::one_sided: return "one-sided";
    default: return "none";
  }
}

struct SideFlatness {
  int side = 0;              // polygon side index
  int bound = 0;             // -1: a, +1: b, 0: not flat
  double node_radius = 0.0;  // distance of the farthest node of the flat run
  double radius = 0.0;       // crossing of d / nu with the bound, interpolated
  int flat_nodes = 0;        // flat nodes besides the corner node
};

struct FlatnessReport {
  int corner = 0;
  FlatVerdict verdict = FlatVerdict::none;
  double radius = 0.0;       // interpolated flat radius (min over both sides)
  double node_radius = 0.0;  // node-based flat radius (min over both sides)
  SideFlatness outgoing, incoming;
  int expected_bound = 0;    // from the sign of c_{j,1}: -1 for a, +1 for b, 0 unknown
  bool sign_consistent = true;
  bool contradiction = false;  // not flat although |c_{j,1}| is significant
  std::string note;
};

/// Scans the boundary nodes of the two sides at corner j outward from the
/// corner and measures how far u stays on a single bound.
inline FlatnessReport flatness_diagnostic(const Discretization& disc, const ControlProblemSpec& spec,
                                          const OptimalSolution& sol, int j, const ExtractionResult& ext,
                                          double tol = 1e-8, double significance = 0.0) {
  const PolygonalDomain& d = disc.domain();
  const CornerData& c = d.corner(j);
  const bool zero_inside = zero_in_bounds(spec.a, spec.b);
  if (c.lambda > 1.0 && zero_inside)
    throw GeometryError("flatness diagnostic is undefined at corner " + std::to_string(j) +
                        " (lambda > 1 and 0 in [a, b])");
  const BoundaryTrace& tr = disc.trace();
  const double R = c.cutoff_radius;
  auto scan = [&](int side) {
    SideFlatness sf;
    sf.side = side;
    std::vector<int> idx = tr.side_nodes(side);
    if (side != j) std::reverse(idx.begin(), idx.end());  // incoming side: start at the corner
    const double u0 = sol.u[idx.front()];
    int bound = 0;
    double value = 0.0;
    if (std::abs(u0 - spec.a) <= tol) bound = -1, value = spec.a;
    else if (std::abs(u0 - spec.b) <= tol) bound = 1, value = spec.b;
    if (bound == 0) return sf;
    std::size_t k = 1;
    while (k < idx.size()) {
      const Point x = disc.mesh().nodes[tr.node[idx[k]]];
      if (distance(x, c.position) > R || std::abs(sol.u[idx[k]] - value) > tol) break;
      ++k;
    }
    sf.flat_nodes = static_cast<int>(k) - 1;
    if (sf.flat_nodes == 0) return sf;
    sf.bound = bound;
    const int last = idx[k - 1];
    const double r_last = distance(disc.mesh().nodes[tr.node[last]], c.position);
    sf.node_radius = r_last;
    sf.radius = r_last;
    if (k < idx.size()) {
      const int nxt = idx[k];
      const double r_next = distance(disc.mesh().nodes[tr.node[nxt]], c.position);
      const double f0 = sol.flux[last] / spec.nu - value, f1 = sol.flux[nxt] / spec.nu - value;
      if (f0 != f1) {
        const double t = std::clamp(f0 / (f0 - f1), 0.0, 1.0);
        sf.radius = r_last + t * (r_next - r_last);
      }
    }
    return sf;
  };
  FlatnessReport rep;
  rep.corner = j;
  rep.outgoing = scan(j);
  rep.incoming = scan(d.prev(j));
  const double c1 = ext.coefficient(1);
  if (c1 > 0.0) rep.expected_bound = -1;
  else if (c1 < 0.0) rep.expected_bound = 1;
  const int bo = rep.outgoing.bound, bi = rep.incoming.bound;
  if (bo != 0 && bo == bi) {
    rep.verdict = bo < 0 ? FlatVerdict::flat_at_a : FlatVerdict::flat_at_b;
    rep.radius = std::min(rep.outgoing.radius, rep.incoming.radius);
    rep.node_radius = std::min(rep.outgoing.node_radius, rep.incoming.node_radius);
    if (c.lambda < 1.0 && rep.expected_bound != 0 && std::abs(c1) > significance)
      rep.sign_consistent = rep.expected_bound == bo;
  } else if (bo != 0 || bi != 0) {
    rep.verdict = FlatVerdict::one_sided;
    rep.radius = std::max(rep.outgoing.radius, rep.incoming.radius);
    rep.node_radius = std::max(rep.outgoing.node_radius, rep.incoming.node_radius);
  }
  if (rep.verdict == FlatVerdict::none && c.lambda < 1.0 && zero_inside && std::abs(c1) > significance &&
      significance > 0.0) {
    rep.contradiction = true;
    rep.note = "no flat neighbourhood although the leading coefficient is significant";
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Subtraction of the predicted singular control terms.

struct SingularControlTerm {
  int corner = 0;
  int mode = 1;
  double coefficient = 0.0;  // a_{j,m}
  bool jump = false;         // times chi_j
};

inline double eval_control_terms(const PolygonalDomain& d, const std::vector<SingularControlTerm>& terms,
                                 Point x) {
  double v = 0.0;
  for (const auto& t : terms) {
    const CornerData& c = d.corner(t.corner);
    const double r = distance(x, c.position);
    if (r == 0.0 || r >= 2.0 * c.cutoff_radius) continue;
    // Only the two sides meeting at the corner carry the term.
    const double tol = 1e-10 * d.diameter();
    const bool on_out = distance_to_segment(x, d.side_start(t.corner), d.side_end(t.corner)) <= tol;
    const bool on_in = distance_to_segment(x, d.side_start(t.corner - 1), d.side_end(t.corner - 1)) <= tol;
    if (!on_out && !on_in) continue;
    double term = t.coefficient * d.cutoff(t.corner, r) * std::pow(r, t.mode * c.lambda - 1.0);
    if (t.jump) term *= on_out ? 1.0 : -1.0;
    v += term;
  }
  return v;
}

struct StructureFit {
  std::vector<SingularControlTerm> terms;
  std::vector<double> radii;           // rho values, decreasing
  std::vector<double> max_control;     // max |u| over boundary nodes with 0 < r < rho
  std::vector<double> max_remainder;   // same for u minus the singular terms
  std::vector<double> osc_control;     // max - min over the same nodes
  std::vector<double> osc_remainder;
  double holder_control = 0.0;  // max |u(x) - u(x')| / |x - x'|^{1/2} over neighbouring nodes near the corner
  double holder_remainder = 0.0;
  Vec remainder;
};

/// Subtracts the singular boundary terms a_{j,m} xi r^{m lambda - 1} (times
/// chi_j for m = 2) predicted from the extracted adjoint coefficients. With
/// `unconstrained` the corner sets J^m are used, otherwise H^m.
inline StructureFit structural_fit_control(const Discretization& disc, const ControlProblemSpec& spec,
                                           const OptimalSolution& sol, const std::vector<ExtractionResult>& ext,
                                           const ModeSets& sets, int focus_corner) {
  const PolygonalDomain& d = disc.domain();
  StructureFit fit;
  for (int m = 1; m <= 3; ++m)
    for (int j : sets[m]) {
      auto it = std::find_if(ext.begin(), ext.end(), [j](const auto& e) { return e.corner == j; });
      if (it == ext.end()) throw ExtractionError("missing extraction for corner " + std::to_string(j));
      const double a = control_singular_coefficient(it->coefficient(m), m, it->lambda, spec.nu, spec.a, spec.b);
      fit.terms.push_back({j, m, a, m == 2});
    }
  const BoundaryTrace& tr = disc.trace();
  fit.remainder = sol.u.values;
  for (int b = 0; b < tr.size(); ++b)
    fit.remainder[b] -= eval_control_terms(d, fit.terms, disc.mesh().nodes[tr.node[b]]);
  const CornerData& c = d.corner(focus_corner);
  const double R = c.cutoff_radius;
  for (double rho = R; rho >= R / 64.0; rho *= 0.5) {
    double mu = 0, mr = 0, umin = kInf, umax = -kInf, rmin = kInf, rmax = -kInf;
    int count = 0;
    for (int b = 0; b < tr.size(); ++b) {
      const double r = distance(disc.mesh().nodes[tr.node[b]], c.position);
      if (r == 0.0 || r >= rho) continue;
      ++count;
      mu = std::max(mu, std::abs(sol.u[b]));
      mr = std::max(mr, std::abs(fit.remainder[b]));
      umin = std::min(umin, sol.u[b]), umax = std::max(umax, sol.u[b]);
      rmin = std::min(rmin, fit.remainder[b]), rmax = std::max(rmax, fit.remainder[b]);
    }
    if (count < 2) break;
    fit.radii.push_back(rho);
    fit.max_control.push_back(mu);
    fit.max_remainder.push_back(mr);
    fit.osc_control.push_back(umax - umin);
    fit.osc_remainder.push_back(rmax - rmin);
  }
  for (std::size_t e = 0; e < tr.edges.size(); ++e) {
    const auto [p, q] = tr.edges[e];
    const Point xp = disc.mesh().nodes[tr.node[p]], xq = disc.mesh().nodes[tr.node[q]];
    if (distance(xp, c.position) > R || distance(xq, c.position) > R) continue;
    const double h = std::sqrt(distance(xp, xq));
    fit.holder_control = std::max(fit.holder_control, std::abs(sol.u[p] - sol.u[q]) / h);
    fit.holder_remainder = std::max(fit.holder_remainder, std::abs(fit.remainder[p] - fit.remainder[q]) / h);
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Singular boundary data and their wedge solutions.

struct Lemma25Report {
  Vec state;       // discrete solution for the singular data
  Vec wedge;       // sum of a xi r^eta s(theta)
  Vec remainder;   // state - wedge
  std::vector<double> radii;            // R, R/2, R/4 around the checked corner
  std::vector<double> max_remainder;    // over nodes with r < rho
  std::vector<double> max_wedge;
  double corner_jump = 0.0;  // max |remainder| at the nodes nearest to the corner
  std::vector<ExtractionResult> residual_coefficients;
};

/// Wedge solution sum of a xi r^eta s(theta) at x.
inline double eval_wedge_solution(const PolygonalDomain& d, const SingularBoundaryData& data, Point x) {
  double v = 0.0;
  auto add = [&](const SingularBoundaryData::Term& t, int n) {
    const CornerData& c = d.corner(t.corner);
    const double r = distance(x, c.position);
    if (r >= 2.0 * c.cutoff_radius) return;
    const auto lp = d.try_local_polar(t.corner, x, 1e-9);
    if (!lp) return;
    if (r == 0.0) {
      if (t.eta > 0.0) return;
      throw GeometryError("wedge solution evaluated at its corner");
    }
    v += t.amplitude * d.cutoff(t.corner, r) * std::pow(r, t.eta) * eval_s_profile(c.angle, n, t.eta, lp->theta);
  };
  for (const auto& t : data.non_jump) add(t, 1);
  for (const auto& t : data.jump) add(t, 2);
  return v;
}

inline Lemma25Report verify_lemma25(const Discretization& disc, const SingularBoundaryData& data, int corner) {
  const PolygonalDomain& d = disc.domain();
  data.validate(d);
  Lemma25Report rep;
  const BoundaryTrace& tr = disc.trace();
  Vec u(tr.size());
  for (int b = 0; b < tr.size(); ++b) {
    const Point x = disc.mesh().nodes[tr.node[b]];
    bool at_corner = false;
    for (const auto& t : data.non_jump) at_corner |= x == d.vertex(t.corner);
    for (const auto& t : data.jump) at_corner |= x == d.vertex(t.corner);
    // The data vanish at their corner (positive exponents).
    u[b] = at_corner ? 0.0 : data.boundary_value(d, x);
  }
  rep.state = solve_state(disc, {u}).values;
  rep.wedge = interpolate(disc.mesh(), [&](Point x) { return eval_wedge_solution(d, data, x); });
  rep.remainder = rep.state - rep.wedge;
  const CornerData& c = d.corner(corner);
  for (double rho : {c.cutoff_radius, 0.5 * c.cutoff_radius, 0.25 * c.cutoff_radius}) {
    double mr = 0.0, mw = 0.0;
    for (int i = 0; i < disc.num_nodes(); ++i) {
      if (distance(disc.mesh().nodes[i], c.position) >= rho) continue;
      mr = std::max(mr, std::abs(rep.remainder[i]));
      mw = std::max(mw, std::abs(rep.wedge[i]));
    }
    rep.radii.push_back(rho);
    rep.max_remainder.push_back(mr);
    rep.max_wedge.push_back(mw);
  }
  // Continuity at the corner: the remainder vanishes at the corner node and
  // its neighbours stay close to it.
  double rmin = kInf;
  for (int i = 0; i < disc.num_nodes(); ++i) {
    const double r = distance(disc.mesh().nodes[i], c.position);
    if (r > 0.0) rmin = std::min(rmin, r);
  }
  for (int i = 0; i < disc.num_nodes(); ++i)
    if (distance(disc.mesh().nodes[i], c.position) <= 1.5 * rmin)
      rep.corner_jump = std::max(rep.corner_jump, std::abs(rep.remainder[i]));
  if (!c.smooth && c.lambda < 2.0) {
    try {
      rep.residual_coefficients.push_back(extract_coefficients(disc.mesh(), rep.remainder, corner));
    } catch (const ExtractionError&) {
      // Too coarse for a fit; the remainder-decay checks still apply.
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------

struct BlowupFit {
  double slope = 0.0;  // d log|u| / d log r
  int samples = 0;
  double max_abs = 0.0;
};

/// Least-squares slope of log|u| against log r over the boundary nodes with
/// r in [r_lo, r_hi] around corner j. Nodes with u = 0 are skipped.
inline BlowupFit boundary_blowup_slope(const Discretization& disc, const Vec& u, int j, double r_lo,
                                       double r_hi) {
  if (!(0.0 < r_lo && r_lo < r_hi)) throw Error("slope window must satisfy 0 < lo < hi");
  const Point c = disc.domain().vertex(j);
  const BoundaryTrace& tr = disc.trace();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  BlowupFit f;
  for (int b = 0; b < tr.size(); ++b) {
    const double r = distance(disc.mesh().nodes[tr.node[b]], c);
    if (r < r_lo || r > r_hi || u[b] == 0.0) continue;
    const double x = std::log(r), y = std::log(std::abs(u[b]));
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++f.samples;
    f.max_abs = std::max(f.max_abs, std::abs(u[b]));
  }
  if (f.samples < 3) throw ExtractionError("fewer than three boundary nodes in the slope window");
  const double n = f.samples;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return f;
}

// ---------------------------------------------------------------------------

struct RateEstimate {
  double order = 0.0;
  bool monotone = true;
  bool warning = false;
  std::string message;
};

/// Least-squares slope of log(value) against log(h).
inline RateEstimate rate_estimate(const std::vector<double>& h, const std::vector<double>& values) {
  if (h.size() != values.size()) throw Error("rate_estimate: size mismatch");
  if (h.size() < 3) throw Error("rate_estimate needs at least three levels");
  RateEstimate r;
  for (double v : values)
    if (!(v > 0.0) || !std::isfinite(v)) {
      r.warning = true;
      r.message = "non-positive value; order undefined";
      r.order = 0.0;
      return r;
    }
  const std::size_t n = h.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(h[i]), y = std::log(values[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  r.order = den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
  bool constant = true;
  for (std::size_t i = 1; i < n; ++i) {
    if (values[i] != values[0]) constant = false;
    if (values[i] > values[i - 1]) r.monotone = false;
  }
  if (constant) {
    r.order = 0.0;
    r.warning = true;
    r.message = "constant sequence";
  } else if (!r.monotone) {
    r.warning = true;
    r.message = "sequence is not monotonically decreasing";
  }
  if (std::abs(r.order) < 1e-14) r.order = 0.0;
  return r;
}

}  // namespace dclab
