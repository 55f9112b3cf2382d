#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "dclab/fem.hpp"
#include "dclab/quadrature.hpp"

using namespace dclab;

namespace {

TriMesh reference_triangle() {
  detail::RawMesh raw;
  raw.nodes = {{0, 0}, {1, 0}, {0, 1}};
  raw.triangles = {{0, 1, 2}};
  auto dom = std::make_shared<const PolygonalDomain>(build_domain({{0, 0}, {1, 0}, {0, 1}}));
  return finalize_mesh(std::move(raw), dom, MeshOptions{}, false);
}

Eigen::MatrixXd dense(const SpMat& a) { return Eigen::MatrixXd(a); }

double sinsin(Point p) { return std::sin(pi * p.x) * std::sin(pi * p.y); }

double manufactured_error(double h) {
  Discretization d(triangulate(unit_square(), h));
  ScalarField f{2 * pi * pi * interpolate(d.mesh(), sinsin)};
  const ScalarField z = solve_dirichlet(d, f, {Vec::Zero(d.num_boundary())});
  return l2_error(d.mesh(), z.values, sinsin);
}

}  // namespace

TEST(Assembly, ReferenceElement) {
  const Assembly a = assemble(reference_triangle());
  Eigen::Matrix3d k;
  k << 1, -0.5, -0.5, -0.5, 0.5, 0, -0.5, 0, 0.5;
  Eigen::Matrix3d m;
  m << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  m /= 24.0;
  EXPECT_LT((dense(a.stiffness) - k).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((dense(a.mass) - m).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Assembly, ConstantsAndSymmetry) {
  for (const auto& mesh : {triangulate(unit_square(), 0.125), triangulate(l_shape(), 0.1, {{2, 0.5}}),
                           triangulate(sector(1.5 * pi, 32), 0.1)}) {
    const Assembly a = assemble(mesh);
    const Vec one = Vec::Ones(mesh.num_nodes());
    EXPECT_LT((a.stiffness * one).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(one.dot(a.mass * one), mesh.geometry().area(), 1e-12);
    const Vec oneB = Vec::Ones(a.boundary_mass.rows());
    EXPECT_NEAR(oneB.dot(a.boundary_mass * oneB), mesh.geometry().perimeter(), 1e-12);
    EXPECT_LT(dense(SpMat(a.stiffness - SpMat(a.stiffness.transpose()))).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT(dense(SpMat(a.mass - SpMat(a.mass.transpose()))).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Assembly, ThreadCountDoesNotChangeMatrices) {
  // Large enough for the parallel path.
  const TriMesh mesh = triangulate(unit_square(), 1.0 / 160);
  ASSERT_GT(mesh.num_triangles(), 40000);
  const char* old = std::getenv("DCLAB_THREADS");
  const std::string saved = old ? old : "";
  setenv("DCLAB_THREADS", "1", 1);
  const Assembly a = assemble(mesh);
  setenv("DCLAB_THREADS", "4", 1);
  const Assembly b = assemble(mesh);
  if (old) setenv("DCLAB_THREADS", saved.c_str(), 1);
  else unsetenv("DCLAB_THREADS");
  ASSERT_EQ(a.stiffness.nonZeros(), b.stiffness.nonZeros());
  for (int k = 0; k < a.stiffness.nonZeros(); ++k) {
    ASSERT_EQ(a.stiffness.valuePtr()[k], b.stiffness.valuePtr()[k]);
    ASSERT_EQ(a.mass.valuePtr()[k], b.mass.valuePtr()[k]);
  }
}

TEST(Dirichlet, ReproducesLinearFunctions) {
  for (const auto& mesh : {triangulate(unit_square(), 0.125), triangulate(l_shape(), 0.1, {{2, 0.5}})}) {
    Discretization d(mesh);
    auto lin = [](Point p) { return 2 * p.x - 3 * p.y + 1; };
    const ScalarField z = solve_dirichlet(d, {Vec::Zero(d.num_nodes())}, boundary_interpolate(d, lin));
    EXPECT_LT((z.values - interpolate(d.mesh(), lin)).cwiseAbs().maxCoeff(), 1e-12);
    const ScalarField one = solve_state(d, {Vec::Ones(d.num_boundary())});
    EXPECT_LT((one.values.array() - 1.0).abs().maxCoeff(), 1e-13);
  }
}

TEST(Dirichlet, InteriorEquationsHold) {
  Discretization d(triangulate(l_shape(), 0.1, {{2, 0.5}}));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  Vec g(d.num_boundary()), f(d.num_nodes());
  for (auto& v : g) v = U(rng);
  for (auto& v : f) v = U(rng);
  const ScalarField z = solve_dirichlet(d, {f}, {g});
  const Vec r = d.stiffness() * z.values - d.mass() * f;
  for (int i : d.interior_nodes()) EXPECT_NEAR(r[i], 0.0, 1e-12);
  EXPECT_EQ((d.restrict_to_boundary(z.values) - g).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Dirichlet, SizeMismatchThrows) {
  Discretization d(triangulate(unit_square(), 0.25));
  EXPECT_THROW(d.dirichlet(Vec::Zero(3), Vec::Zero(d.num_boundary())), Error);
  EXPECT_THROW(d.dirichlet(Vec::Zero(d.num_nodes()), Vec::Zero(2)), Error);
}

TEST(Dirichlet, ManufacturedSolutionSecondOrder) {
  const double e1 = manufactured_error(1.0 / 8), e2 = manufactured_error(1.0 / 16), e3 = manufactured_error(1.0 / 32);
  EXPECT_GT(std::log2(e1 / e2), 1.9);
  EXPECT_GT(std::log2(e2 / e3), 1.9);
  EXPECT_LT(e3, 3e-3);
}

TEST(Flux, LinearFunctionGivesNormalComponent) {
  Discretization d(triangulate(unit_square(), 0.125));
  const Vec z = interpolate(d.mesh(), [](Point p) { return p.x; });
  const Vec flux = d.flux(z, Vec::Zero(d.num_nodes()), FluxMass::lumped);
  const auto& bt = d.trace();
  for (int b = 0; b < d.num_boundary(); ++b) {
    const Point p = d.mesh().nodes[bt.node[b]];
    if (std::find(d.mesh().corner_nodes.begin(), d.mesh().corner_nodes.end(), bt.node[b]) != d.mesh().corner_nodes.end())
      continue;
    const double nx = d.domain().outward_normal(bt.side[b]).x;
    EXPECT_NEAR(flux[b], nx, 1e-12) << p.x << ' ' << p.y;
  }
}

TEST(Flux, IntegralBalancesSource) {
  Discretization d(triangulate(l_shape(), 0.1, {{2, 0.5}}));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1, 1);
  Vec g(d.num_boundary()), f(d.num_nodes());
  for (auto& v : g) v = U(rng);
  for (auto& v : f) v = U(rng);
  const ScalarField z = solve_dirichlet(d, {f}, {g});
  const BoundaryField dn = variational_normal_derivative(d, z, {f});
  const Vec oneB = Vec::Ones(d.num_boundary());
  const double source = Vec::Ones(d.num_nodes()).dot(d.mass() * f);
  EXPECT_NEAR(oneB.dot(d.trace().mass * dn.values), -source, 1e-11);
}

TEST(Flux, ConvergesForSmoothSolution) {
  // z = sin(pi x) sin(pi y): on y = 0 the outward normal derivative is -pi sin(pi x).
  double prev = 1e300;
  for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
    Discretization d(triangulate(unit_square(), h));
    ScalarField f{2 * pi * pi * interpolate(d.mesh(), sinsin)};
    const ScalarField z = solve_dirichlet(d, f, {Vec::Zero(d.num_boundary())});
    const BoundaryField dn = variational_normal_derivative(d, z, f);
    double err = 0.0;
    for (int b = 0; b < d.num_boundary(); ++b) {
      const Point p = d.mesh().nodes[d.trace().node[b]];
      if (d.trace().side[b] != 0 || p.x < 0.2 || p.x > 0.8) continue;
      err = std::max(err, std::abs(dn[b] + pi * std::sin(pi * p.x)));
    }
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 0.02);
}

TEST(MaxPrinciple, HoldsOnNonObtuseMeshes) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1, 1);
  for (const auto& mesh : {triangulate(unit_square(), 1.0 / 16), triangulate(l_shape(), 0.125)}) {
    ASSERT_TRUE(mesh.non_obtuse);
    Discretization d(mesh);
    for (int trial = 0; trial < 5; ++trial) {
      Vec u(d.num_boundary());
      for (auto& v : u) v = U(rng);
      const BoundaryField bu{u};
      const auto rep = check_max_principle(mesh, solve_state(d, bu), bu);
      EXPECT_TRUE(rep.strict);
      EXPECT_TRUE(rep.holds) << rep.violation;
    }
  }
}

TEST(Quadrature, TargetLoadOfConstant) {
  const TriMesh m = triangulate(l_shape(), 0.125);
  const TargetLoad t = assemble_target(m, TargetFunction::constant(2.0));
  EXPECT_NEAR(t.b.sum(), 2.0 * 3.0, 1e-12);
  EXPECT_NEAR(t.c, 4.0 * 3.0, 1e-12);
}

TEST(Quadrature, SkewTargetSplitsElementsExactly) {
  // The bisector of the re-entrant corner cuts the L-shape into two halves of equal area.
  const auto d = l_shape();
  const TargetFunction skew = TargetFunction::skew(d, 2);
  ASSERT_TRUE(skew.jump.has_value());
  const TriMesh m = triangulate(d, 0.3, {{2, 0.7}});
  const TargetLoad t = assemble_target(m, skew);
  EXPECT_NEAR(t.b.sum(), 0.0, 1e-12);
  EXPECT_NEAR(t.c, 3.0, 1e-12);
  EXPECT_EQ(skew({0.5, 0.1}), 1.0);
  EXPECT_EQ(skew({-0.1, -0.5}), -1.0);
}
