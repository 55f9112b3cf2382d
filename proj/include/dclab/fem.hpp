#pragma once

// P1 finite elements: assembly, Dirichlet solves with nodal boundary data,
// the variational normal derivative and the discrete maximum principle check.

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <thread>
#include <vector>

#include "error.hpp"
#include "mesh.hpp"
#include "quadrature.hpp"

namespace dclab {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

/// Nodal values on every mesh node.
struct ScalarField {
  Vec values;
  double operator[](int i) const { return values[i]; }
  int size() const { return static_cast<int>(values.size()); }
};

/// Nodal values on the boundary nodes, in BoundaryTrace order.
struct BoundaryField {
  Vec values;
  double operator[](int i) const { return values[i]; }
  int size() const { return static_cast<int>(values.size()); }
};

struct Assembly {
  SpMat stiffness;      // A
  SpMat mass;           // M_Omega
  SpMat boundary_mass;  // M_Gamma in boundary ordering
};

/// Number of assembly threads: DCLAB_THREADS if set, else the hardware count.
inline unsigned assembly_threads() {
  if (const char* env = std::getenv("DCLAB_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {

/// Element triplets computed in parallel chunks and concatenated in element
/// order, so the assembled matrices do not depend on the thread count.
template <class ElementFn>
std::vector<Eigen::Triplet<double>> element_triplets(int n_elems, int per_elem, ElementFn&& fn) {
  const unsigned nt = std::min<unsigned>(assembly_threads(), std::max(1, n_elems / 20000));
  std::vector<std::vector<Eigen::Triplet<double>>> parts(nt);
  auto work = [&](unsigned p) {
    const int lo = static_cast<int>(static_cast<long>(n_elems) * p / nt);
    const int hi = static_cast<int>(static_cast<long>(n_elems) * (p + 1) / nt);
    parts[p].reserve(static_cast<std::size_t>(hi - lo) * per_elem);
    for (int e = lo; e < hi; ++e) fn(e, parts[p]);
  };
  if (nt == 1) {
    work(0);
    return std::move(parts[0]);
  }
  std::vector<std::thread> pool;
  for (unsigned p = 0; p < nt; ++p) pool.emplace_back(work, p);
  for (auto& t : pool) t.join();
  std::vector<Eigen::Triplet<double>> all;
  std::size_t total = 0;
  for (const auto& part : parts) total += part.size();
  all.reserve(total);
  for (auto& part : parts) all.insert(all.end(), part.begin(), part.end());
  return all;
}

}  // namespace detail

inline Assembly assemble(const TriMesh& m, const BoundaryTrace& trace) {
  const int n = m.num_nodes();
  auto stiff = detail::element_triplets(m.num_triangles(), 9, [&](int t, auto& out) {
    const auto& tr = m.triangles[t];
    const double A2 = m.area(t) * 2.0;
    if (!(A2 > 0.0)) throw MeshError("degenerate triangle during assembly");
    Point g[3];
    for (int k = 0; k < 3; ++k) {
      const Point a = m.nodes[tr[(k + 1) % 3]], b = m.nodes[tr[(k + 2) % 3]];
      g[k] = (1.0 / A2) * Point{a.y - b.y, b.x - a.x};
    }
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) out.emplace_back(tr[i], tr[k], 0.5 * A2 * dot(g[i], g[k]));
  });
  auto mass = detail::element_triplets(m.num_triangles(), 9, [&](int t, auto& out) {
    const auto& tr = m.triangles[t];
    const double a = m.area(t);
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) out.emplace_back(tr[i], tr[k], a * (i == k ? 2.0 : 1.0) / 12.0);
  });
  Assembly out;
  out.stiffness.resize(n, n);
  out.stiffness.setFromTriplets(stiff.begin(), stiff.end());
  out.mass.resize(n, n);
  out.mass.setFromTriplets(mass.begin(), mass.end());
  out.boundary_mass = trace.mass;
  return out;
}

inline Assembly assemble(const TriMesh& m) { return assemble(m, boundary_trace_space(m)); }

enum class FluxMass { consistent, lumped };

/// Mesh, trace space, assembled matrices and a factorization of the interior
/// stiffness block. Immutable after construction.
class Discretization {
public:
  explicit Discretization(TriMesh mesh)
      : Discretization(std::make_shared<const TriMesh>(std::move(mesh))) {}

  explicit Discretization(std::shared_ptr<const TriMesh> mesh) : mesh_(std::move(mesh)) {
    trace_ = boundary_trace_space(*mesh_);
    sys_ = assemble(*mesh_, trace_);
    const int n = mesh_->num_nodes();
    interior_index_.assign(n, -1);
    for (int i = 0; i < n; ++i)
      if (trace_.index_of[i] < 0) {
        interior_index_[i] = static_cast<int>(interior_.size());
        interior_.push_back(i);
      }
    // Split A into the interior block and the interior-boundary coupling.
    std::vector<Eigen::Triplet<double>> ii, ib;
    for (int c = 0; c < sys_.stiffness.outerSize(); ++c)
      for (SpMat::InnerIterator it(sys_.stiffness, c); it; ++it) {
        const int r = interior_index_[it.row()];
        if (r < 0) continue;
        const int ci = interior_index_[it.col()];
        if (ci >= 0) ii.emplace_back(r, ci, it.value());
        else ib.emplace_back(r, trace_.index_of[it.col()], it.value());
      }
    const int ni = static_cast<int>(interior_.size());
    A_II_.resize(ni, ni);
    A_II_.setFromTriplets(ii.begin(), ii.end());
    A_IB_.resize(ni, trace_.size());
    A_IB_.setFromTriplets(ib.begin(), ib.end());
    if (ni > 0) {
      if (ni <= kDirectLimit) {
        ldlt_ = std::make_unique<Eigen::SimplicialLDLT<SpMat>>(A_II_);
        if (ldlt_->info() != Eigen::Success) throw SolverError("interior stiffness factorization failed");
        const Vec d = ldlt_->vectorD();
        if ((d.array() <= 0.0).any()) throw SolverError("interior stiffness block is not positive definite");
      } else {
        cg_ = std::make_unique<Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper>>();
        cg_->setTolerance(1e-12);
        cg_->setMaxIterations(20 * ni);
        cg_->compute(A_II_);
      }
    }
    boundary_ldlt_.compute(trace_.mass);
    if (boundary_ldlt_.info() != Eigen::Success) throw SolverError("boundary mass factorization failed");
  }

  static constexpr int kDirectLimit = 200000;

  const TriMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const TriMesh> mesh_ptr() const { return mesh_; }
  const PolygonalDomain& domain() const { return mesh_->geometry(); }
  const BoundaryTrace& trace() const { return trace_; }
  const SpMat& stiffness() const { return sys_.stiffness; }
  const SpMat& mass() const { return sys_.mass; }
  const SpMat& boundary_mass() const { return sys_.boundary_mass; }
  const Assembly& system() const { return sys_; }
  const std::vector<int>& interior_nodes() const { return interior_; }
  int num_nodes() const { return mesh_->num_nodes(); }
  int num_boundary() const { return trace_.size(); }

  /// A_II^{-1} r.
  Vec solve_interior(const Vec& r) const {
    if (r.size() == 0) return r;
    if (ldlt_) return ldlt_->solve(r);
    Vec x = cg_->solve(r);
    if (cg_->info() != Eigen::Success) throw SolverError("CG on the interior block did not converge");
    return x;
  }

  /// z with z_B = g and z_I = A_II^{-1} (F_I - A_IB g) for a load vector F.
  Vec dirichlet(const Vec& load, const Vec& g) const {
    if (load.size() != num_nodes()) throw Error("load vector size mismatch");
    if (g.size() != num_boundary()) throw Error("boundary data size mismatch");
    Vec rI(interior_.size());
    for (std::size_t k = 0; k < interior_.size(); ++k) rI[k] = load[interior_[k]];
    rI -= A_IB_ * g;
    const Vec zI = solve_interior(rI);
    Vec z(num_nodes());
    for (std::size_t k = 0; k < interior_.size(); ++k) z[interior_[k]] = zI[k];
    for (int b = 0; b < num_boundary(); ++b) z[trace_.node[b]] = g[b];
    return z;
  }

  /// Boundary flux d with M_Gamma d = (A z - F)_B.
  Vec flux(const Vec& z, const Vec& load, FluxMass mass = FluxMass::consistent) const {
    const Vec r = sys_.stiffness * z - load;
    Vec rB(num_boundary());
    for (int b = 0; b < num_boundary(); ++b) rB[b] = r[trace_.node[b]];
    if (mass == FluxMass::lumped) return rB.cwiseQuotient(trace_.lumped);
    return boundary_ldlt_.solve(rB);
  }

  /// M_Gamma^{-1} applied to a boundary vector.
  Vec boundary_mass_solve(const Vec& r) const { return boundary_ldlt_.solve(r); }

  Vec restrict_to_boundary(const Vec& z) const {
    Vec out(num_boundary());
    for (int b = 0; b < num_boundary(); ++b) out[b] = z[trace_.node[b]];
    return out;
  }

private:
  std::shared_ptr<const TriMesh> mesh_;
  BoundaryTrace trace_;
  Assembly sys_;
  std::vector<int> interior_;
  std::vector<int> interior_index_;
  SpMat A_II_, A_IB_;
  std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> ldlt_;
  std::unique_ptr<Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper>> cg_;
  Eigen::SimplicialLDLT<SpMat> boundary_ldlt_;
};

/// -Laplace z = f in the domain, z = g on the boundary; f is given by nodal
/// values and enters through the mass matrix.
inline ScalarField solve_dirichlet(const Discretization& d, const ScalarField& f, const BoundaryField& g) {
  return {d.dirichlet(d.mass() * f.values, g.values)};
}

inline ScalarField solve_dirichlet_load(const Discretization& d, const Vec& load, const BoundaryField& g) {
  return {d.dirichlet(load, g.values)};
}

/// Variational normal derivative of z for the source f (nodal values).
inline BoundaryField variational_normal_derivative(const Discretization& d, const ScalarField& z,
                                                   const ScalarField& f,
                                                   FluxMass mass = FluxMass::consistent) {
  return {d.flux(z.values, d.mass() * f.values, mass)};
}

/// Discrete state for Dirichlet data u imposed nodally.
inline ScalarField solve_state(const Discretization& d, const BoundaryField& u) {
  return {d.dirichlet(Vec::Zero(d.num_nodes()), u.values)};
}

inline BoundaryField boundary_interpolate(const Discretization& d, const std::function<double(Point)>& f) {
  Vec v(d.num_boundary());
  for (int b = 0; b < d.num_boundary(); ++b) v[b] = f(d.mesh().nodes[d.trace().node[b]]);
  return {v};
}

struct MaxPrincipleReport {
  double max_state = 0.0;
  double max_data = 0.0;
  double violation = 0.0;  // max(0, max|y| - max|u|)
  bool strict = false;     // mesh is non-obtuse, so the bound is guaranteed
  bool holds = false;
};

inline MaxPrincipleReport check_max_principle(const TriMesh& m, const ScalarField& y, const BoundaryField& u) {
  MaxPrincipleReport r;
  r.max_state = y.values.size() ? y.values.cwiseAbs().maxCoeff() : 0.0;
  r.max_data = u.values.size() ? u.values.cwiseAbs().maxCoeff() : 0.0;
  r.violation = std::max(0.0, r.max_state - r.max_data);
  r.strict = m.non_obtuse;
  r.holds = r.max_state <= r.max_data * (1.0 + 1e-10);
  return r;
}

}  // namespace dclab
