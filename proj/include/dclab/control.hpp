#pragma once

// Reduced linear-quadratic Dirichlet boundary control:
//   min 1/2 |S u + y0 - y_target|^2 + nu/2 |u|^2_Gamma,  a <= u <= b,
// discretized with P1 elements and nodal Dirichlet imposition. The boundary
// inner product is the lumped boundary mass D, which makes the discrete
// optimality condition the nodewise projection u = proj_[a,b](d / nu) with d
// the (lumped) variational normal derivative of the adjoint state.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "error.hpp"
#include "fem.hpp"
#include "quadrature.hpp"

namespace dclab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct ControlProblemSpec {
  double nu = 1.0;
  double a = -kInf;
  double b = kInf;
  TargetFunction target = TargetFunction::constant(0.0);
  // Optional data of the form -Laplace y = f, y = u + g; reduced by a lifting.
  std::optional<std::function<double(Point)>> source;
  std::optional<std::function<double(Point)>> offset;

  void validate() const {
    if (!(nu > 0.0) || !std::isfinite(nu)) throw ConfigError("regularization weight nu must be a positive number");
    if (!(a < b)) throw ConfigError("bounds must satisfy a < b");
    if (std::isnan(a) || std::isnan(b)) throw ConfigError("bounds must not be NaN");
    if (a == kInf || b == -kInf) throw ConfigError("bounds are inverted infinities");
    if (!target.eval) throw ConfigError("target function missing");
  }
  bool bounded() const { return std::isfinite(a) || std::isfinite(b); }
  double project(double v) const { return std::clamp(v, a, b); }
};

struct SolverOptions {
  int max_iter = 200;
  int pdas_iter_before_fallback = 50;
  double kkt_tol = 1e-10;
  double cg_rel_tol = 1e-13;
  double unconstrained_tol = 1e-11;
};

struct IterationRecord {
  int iteration = 0;
  std::string method;  // "pdas", "projected-gradient", "cg"
  double objective = 0.0;
  double kkt = 0.0;
  int active_a = 0;
  int active_b = 0;
};

struct KktResidual {
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;
  double max() const { return std::max({stationarity, feasibility, complementarity}); }
};

struct OptimalSolution {
  BoundaryField u;
  ScalarField y;    // full state, lifting included
  ScalarField phi;  // adjoint state
  BoundaryField flux;  // normal derivative of phi
  std::vector<int> active_a, active_b;  // boundary indices
  std::vector<IterationRecord> log;
  KktResidual kkt;
  double objective = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Non-convergence; carries the best iterate found.
class ControlSolverError : public SolverError {
public:
  ControlSolverError(const std::string& what, OptimalSolution best)
      : SolverError(what), best_(std::move(best)) {}
  const OptimalSolution& best() const { return best_; }

private:
  OptimalSolution best_;
};

/// The discrete reduced problem on one mesh. Holds references to the
/// discretization, which must outlive it.
class ReducedProblem {
public:
  ReducedProblem(const Discretization& disc, ControlProblemSpec spec)
      : disc_(disc), spec_(std::move(spec)) {
    spec_.validate();
    const TargetLoad t = assemble_target(disc_.mesh(), spec_.target);
    b_ = t.b;
    c_ = t.c;
    y0_ = Vec::Zero(disc_.num_nodes());
    if (spec_.source || spec_.offset) {
      Vec load = Vec::Zero(disc_.num_nodes());
      if (spec_.source) load = disc_.mass() * interpolate(disc_.mesh(), *spec_.source);
      Vec g = Vec::Zero(disc_.num_boundary());
      if (spec_.offset) g = boundary_interpolate(disc_, *spec_.offset).values;
      y0_ = disc_.dirichlet(load, g);
      const Vec My0 = disc_.mass() * y0_;
      c_ = c_ - 2.0 * y0_.dot(b_) + y0_.dot(My0);
      b_ -= My0;
    }
    D_ = disc_.trace().lumped;
  }

  const Discretization& disc() const { return disc_; }
  const ControlProblemSpec& spec() const { return spec_; }
  const Vec& boundary_weights() const { return D_; }
  const Vec& lifting() const { return y0_; }
  int size() const { return disc_.num_boundary(); }

  /// S u (without the lifting).
  Vec state(const Vec& u) const { return disc_.dirichlet(Vec::Zero(disc_.num_nodes()), u); }

  struct Evaluation {
    Vec y;     // S u
    Vec phi;   // adjoint
    Vec flux;  // d = D^{-1} (A phi - g)_B
    double objective = 0.0;
  };

  Evaluation evaluate(const Vec& u) const {
    Evaluation e;
    e.y = state(u);
    const Vec My = disc_.mass() * e.y;
    const Vec g = My - b_;
    e.phi = disc_.dirichlet(g, Vec::Zero(disc_.num_boundary()));
    e.flux = disc_.flux(e.phi, g, FluxMass::lumped);
    e.objective = 0.5 * (e.y.dot(My) - 2.0 * e.y.dot(b_) + c_) + 0.5 * spec_.nu * u.dot(D_.cwiseProduct(u));
    return e;
  }

  double objective(const Vec& u) const {
    const Vec y = state(u);
    return 0.5 * (y.dot(disc_.mass() * y) - 2.0 * y.dot(b_) + c_) + 0.5 * spec_.nu * u.dot(D_.cwiseProduct(u));
  }

  /// Riesz representative of the gradient in the D inner product: nu u - d.
  Vec gradient(const Vec& u) const {
    const Evaluation e = evaluate(u);
    return spec_.nu * u - e.flux;
  }

  /// K v = E^T M E v, with E the discrete harmonic extension.
  Vec apply_K(const Vec& v) const {
    const Vec g = disc_.mass() * state(v);
    const Vec phi = disc_.dirichlet(g, Vec::Zero(disc_.num_boundary()));
    return -disc_.flux(phi, g, FluxMass::lumped).cwiseProduct(D_);
  }

  /// H v = nu D v + K v: Hessian of the objective in Euclidean coordinates.
  Vec apply_H(const Vec& v) const { return spec_.nu * D_.cwiseProduct(v) + apply_K(v); }

  /// q with grad J(u) = H u - q.
  const Vec& linear_term() const {
    if (!q_) {
      const Vec g = -b_;
      const Vec phi = disc_.dirichlet(g, Vec::Zero(disc_.num_boundary()));
      q_ = disc_.flux(phi, g, FluxMass::lumped).cwiseProduct(D_);
    }
    return *q_;
  }

private:
  const Discretization& disc_;
  ControlProblemSpec spec_;
  Vec b_;
  double c_ = 0.0;
  Vec y0_;
  Vec D_;
  mutable std::optional<Vec> q_;
};

inline double objective(const ReducedProblem& p, const BoundaryField& u) { return p.objective(u.values); }

inline BoundaryField reduced_gradient(const ReducedProblem& p, const BoundaryField& u) {
  return {p.gradient(u.values)};
}

namespace detail {

inline bool at_value(double u, double bound) {
  return std::isfinite(bound) && std::abs(u - bound) <= 1e-14 * std::max(1.0, std::abs(bound));
}

}  // namespace detail

inline KktResidual kkt_residual(const ReducedProblem& p, const Vec& u, const Vec& flux) {
  const ControlProblemSpec& s = p.spec();
  const Vec& D = p.boundary_weights();
  KktResidual r;
  double st = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    const double diff = u[i] - s.project(flux[i] / s.nu);
    st += D[i] * diff * diff;
    r.feasibility = std::max({r.feasibility, s.a - u[i], u[i] - s.b});
    if (detail::at_value(u[i], s.a)) r.complementarity = std::max(r.complementarity, flux[i] - s.nu * s.a);
    else if (detail::at_value(u[i], s.b)) r.complementarity = std::max(r.complementarity, s.nu * s.b - flux[i]);
  }
  r.stationarity = std::sqrt(st);
  r.feasibility = std::max(0.0, r.feasibility);
  r.complementarity = std::max(0.0, r.complementarity);
  return r;
}

inline KktResidual kkt_residual(const ReducedProblem& p, const OptimalSolution& sol) {
  return kkt_residual(p, sol.u.values, p.evaluate(sol.u.values).flux);
}

namespace detail {

/// Preconditioned CG for H restricted to the index set `free`, with the
/// diagonal nu D as preconditioner.
inline Vec restricted_cg(const ReducedProblem& p, const std::vector<int>& free, const Vec& rhs, Vec x,
                         double rel_tol, int max_iter) {
  const int n = static_cast<int>(free.size());
  if (n == 0) return x;
  const Vec& D = p.boundary_weights();
  const double nu = p.spec().nu;
  auto apply = [&](const Vec& v) {
    Vec full = Vec::Zero(p.size());
    for (int k = 0; k < n; ++k) full[free[k]] = v[k];
    const Vec Hf = p.apply_H(full);
    Vec out(n);
    for (int k = 0; k < n; ++k) out[k] = Hf[free[k]];
    return out;
  };
  Vec pinv(n);
  for (int k = 0; k < n; ++k) pinv[k] = 1.0 / (nu * D[free[k]]);
  Vec r = rhs - apply(x);
  const double target = rel_tol * std::max(rhs.norm(), 1e-300);
  if (r.norm() <= target) return x;
  Vec z = pinv.cwiseProduct(r);
  Vec d = z;
  double rz = r.dot(z);
  for (int it = 0; it < max_iter; ++it) {
    const Vec Hd = apply(d);
    const double dHd = d.dot(Hd);
    if (!(dHd > 0.0)) throw SolverError("reduced Hessian is not positive definite");
    const double alpha = rz / dHd;
    x += alpha * d;
    r -= alpha * Hd;
    if (r.norm() <= target) return x;
    z = pinv.cwiseProduct(r);
    const double rz_new = r.dot(z);
    d = z + (rz_new / rz) * d;
    rz = rz_new;
  }
  // Accept a stagnated but tiny residual; otherwise report.
  if (r.norm() <= 1e3 * target) return x;
  throw SolverError("CG on the reduced Hessian stagnated (relative residual " +
                    std::to_string(r.norm() / std::max(rhs.norm(), 1e-300)) + ")");
}

inline OptimalSolution package(const ReducedProblem& p, const Vec& u) {
  const ControlProblemSpec& s = p.spec();
  const auto e = p.evaluate(u);
  OptimalSolution sol;
  sol.u = {u};
  sol.y = {e.y + p.lifting()};
  sol.phi = {e.phi};
  sol.flux = {e.flux};
  sol.objective = e.objective;
  for (int i = 0; i < u.size(); ++i) {
    if (at_value(u[i], s.a)) sol.active_a.push_back(i);
    else if (at_value(u[i], s.b)) sol.active_b.push_back(i);
  }
  sol.kkt = kkt_residual(p, u, e.flux);
  return sol;
}

}  // namespace detail

inline OptimalSolution solve_unconstrained(const ReducedProblem& p, const SolverOptions& opt = {},
                                           std::optional<Vec> start = std::nullopt) {
  std::vector<int> all(p.size());
  for (int i = 0; i < p.size(); ++i) all[i] = i;
  Vec x0 = start ? *start : Vec::Zero(p.size());
  const Vec u = detail::restricted_cg(p, all, p.linear_term(), x0, opt.unconstrained_tol, 10 * p.size() + 100);
  OptimalSolution sol = detail::package(p, u);
  // Unconstrained: no active sets and no projection.
  sol.active_a.clear();
  sol.active_b.clear();
  double st = 0.0;
  const Vec g = p.spec().nu * u - sol.flux.values;
  for (int i = 0; i < u.size(); ++i) st += p.boundary_weights()[i] * g[i] * g[i];
  sol.kkt = {std::sqrt(st), 0.0, 0.0};
  sol.converged = true;
  sol.iterations = 1;
  sol.log.push_back({1, "cg", sol.objective, sol.kkt.max(), 0, 0});
  return sol;
}

/// Primal-dual active set iteration with a projected-gradient fallback.
inline OptimalSolution solve_constrained(const ReducedProblem& p, const SolverOptions& opt = {},
                                         std::optional<Vec> start = std::nullopt) {
  const ControlProblemSpec& s = p.spec();
  const int n = p.size();
  Vec u;
  if (start) {
    if (start->size() != n) throw SolverError("initial control has the wrong size");
    u = start->unaryExpr([&](double v) { return s.project(v); });
  } else {
    // Projected unconstrained minimizer.
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    u = detail::restricted_cg(p, all, p.linear_term(), Vec::Zero(n), opt.unconstrained_tol, 10 * n + 100)
            .unaryExpr([&](double v) { return s.project(v); });
  }
  const Vec& q = p.linear_term();
  OptimalSolution best;
  best.kkt.stationarity = kInf;
  std::set<std::vector<signed char>> seen;
  std::vector<signed char> prev_state;
  bool fallback = false;
  std::vector<IterationRecord> log;

  auto finish = [&](OptimalSolution sol, bool converged, int it) {
    sol.log = log;
    sol.converged = converged;
    sol.iterations = it;
    return sol;
  };

  double step = 1.0 / s.nu;
  for (int it = 1; it <= opt.max_iter; ++it) {
    const auto ev = p.evaluate(u);
    const KktResidual kkt = kkt_residual(p, u, ev.flux);
    std::vector<signed char> state(n, 0);
    int na = 0, nb = 0;
    for (int i = 0; i < n; ++i) {
      if (ev.flux[i] > s.nu * s.b) state[i] = 1, ++nb;
      else if (ev.flux[i] < s.nu * s.a) state[i] = -1, ++na;
    }
    log.push_back({it, fallback ? "projected-gradient" : "pdas", ev.objective, kkt.max(), na, nb});
    if (kkt.max() < best.kkt.max()) {
      best = detail::package(p, u);
    }
    if (kkt.max() < opt.kkt_tol && (fallback || state == prev_state))
      return finish(detail::package(p, u), true, it);

    if (!fallback) {
      const bool cycling = state != prev_state && seen.count(state) > 0;
      if (cycling || it > opt.pdas_iter_before_fallback) {
        fallback = true;
      } else {
        seen.insert(state);
        prev_state = state;
        Vec next(n);
        std::vector<int> free;
        for (int i = 0; i < n; ++i) {
          if (state[i] == 1) next[i] = s.b;
          else if (state[i] == -1) next[i] = s.a;
          else {
            next[i] = 0.0;
            free.push_back(i);
          }
        }
        const Vec Hfix = p.apply_H(next);
        Vec rhs(free.size()), x0(free.size());
        for (std::size_t k = 0; k < free.size(); ++k) {
          rhs[k] = q[free[k]] - Hfix[free[k]];
          x0[k] = u[free[k]];
        }
        const Vec xI = detail::restricted_cg(p, free, rhs, x0, opt.cg_rel_tol, 10 * n + 100);
        for (std::size_t k = 0; k < free.size(); ++k) next[free[k]] = xI[k];
        // Round off solver noise so that the iterate is feasible.
        u = next.unaryExpr([&](double v) { return s.project(v); });
        continue;
      }
    }
    // Projected gradient with Armijo backtracking in the D inner product.
    const Vec grad = s.nu * u - ev.flux;
    const Vec& D = p.boundary_weights();
    double t = step * 2.0;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      const Vec trial = (u - t * grad).unaryExpr([&](double v) { return s.project(v); });
      const Vec du = trial - u;
      const double decrease = grad.dot(D.cwiseProduct(du));
      const double J = p.objective(trial);
      if (J <= ev.objective + 1e-4 * decrease) {
        u = trial;
        step = t;
        break;
      }
    }
  }
  throw ControlSolverError("constrained solver did not converge in " + std::to_string(opt.max_iter) +
                               " iterations",
                           finish(best, false, opt.max_iter));
}

}  // namespace dclab
