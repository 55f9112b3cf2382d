#include <gtest/gtest.h>

#include <cmath>

#include "dclab/singular.hpp"

using namespace dclab;

namespace {

// Local polar coordinates of the L-shape re-entrant corner coincide with global ones.
double mode(Point x, int m) {
  const auto lp = l_shape().local_polar(2, x);
  const double a = m * 2.0 / 3.0;
  return std::pow(lp.r, a) * std::sin(a * lp.theta);
}

ExtractionResult manual(int corner, double lambda, std::vector<int> modes, std::vector<double> c) {
  ExtractionResult e;
  e.corner = corner;
  e.lambda = lambda;
  e.modes = std::move(modes);
  e.coefficients = std::move(c);
  return e;
}

ControlProblemSpec box(double a, double b, TargetFunction t) {
  ControlProblemSpec s;
  s.a = a;
  s.b = b;
  s.target = std::move(t);
  return s;
}

}  // namespace

TEST(Extraction, RecoversSynthesizedField) {
  const TriMesh m = triangulate(l_shape(), 1.0 / 32, {{2, 0.5}});
  const Vec phi = interpolate(m, [](Point x) { return 0.7 * mode(x, 1) - 0.2 * mode(x, 2) + 0.3 * x.x + 0.1 * x.y * x.y; });
  ExtractionOptions o;
  o.modes = {1, 2};
  const ExtractionResult e = extract_coefficients(m, phi, 2, o);
  EXPECT_GE(e.nodes, 30);
  EXPECT_NEAR(e.coefficient(1), 0.7, 1e-9);
  EXPECT_NEAR(e.coefficient(2), -0.2, 1e-9);
  EXPECT_LT(e.residual, 1e-10);
  EXPECT_DOUBLE_EQ(e.r1, 0.25 * l_shape().corner(2).cutoff_radius);
  EXPECT_DOUBLE_EQ(e.r2, 0.5 * l_shape().corner(2).cutoff_radius);
}

TEST(Extraction, DropsModeCollinearWithBackground) {
  // On the L-shape the third mode r^2 sin(2 theta) = 2 x y is a background monomial.
  const TriMesh m = triangulate(l_shape(), 1.0 / 32, {{2, 0.5}});
  const Vec phi = interpolate(m, [](Point x) { return x.x * x.y; });
  const ExtractionResult e = extract_coefficients(m, phi, 2);
  EXPECT_FALSE(e.has_mode(3));
  EXPECT_TRUE(e.has_mode(1));
  EXPECT_FALSE(e.warnings.empty());
  EXPECT_NEAR(e.coefficient(1), 0.0, 1e-9);
  EXPECT_NEAR(e.coefficient(2), 0.0, 1e-9);
}

TEST(Extraction, FiniteElementSolution) {
  // Discrete harmonic function with the boundary values of the leading mode.
  for (double h : {1.0 / 16, 1.0 / 32}) {
    Discretization d(triangulate(l_shape(), h, {{2, 0.5}}));
    const ScalarField z = solve_dirichlet(d, {Vec::Zero(d.num_nodes())}, boundary_interpolate(d, [](Point x) {
                                            return x == Point{0, 0} ? 0.0 : mode(x, 1);
                                          }));
    const ExtractionResult e = extract_coefficients(d.mesh(), z.values, 2);
    EXPECT_NEAR(e.coefficient(1), 1.0, 0.02) << h;
    EXPECT_NEAR(e.coefficient(2), 0.0, 0.05) << h;
  }
}

TEST(Extraction, Errors) {
  const TriMesh coarse = triangulate(l_shape(), 0.25);
  EXPECT_THROW(extract_coefficients(coarse, Vec::Zero(coarse.num_nodes()), 2), ExtractionError);
  EXPECT_THROW(extract_coefficients(coarse, Vec::Zero(3), 2), ExtractionError);
  const TriMesh s = triangulate(sector(1.5 * pi, 16), 0.2);
  EXPECT_THROW(extract_coefficients(s, Vec::Zero(s.num_nodes()), 5), ExtractionError);
  ExtractionOptions o;
  o.r1 = 0.06;
  o.r2 = 0.05;
  const TriMesh m = triangulate(l_shape(), 1.0 / 32, {{2, 0.5}});
  EXPECT_THROW(extract_coefficients(m, Vec::Zero(m.num_nodes()), 2, o), ExtractionError);
}

TEST(Classification, ThresholdAndUndetermined) {
  const auto s = sector(1.5 * pi, 64);
  auto run = [&](double c1) { return classify_H_sets(s, 10.0, {manual(0, 2.0 / 3.0, {1, 2}, {c1, 1.0})}); };
  const auto zero = run(1e-6);
  EXPECT_NEAR(zero.threshold, 1e-3, 1e-15);
  EXPECT_EQ(zero.sets[2], CornerSet{0});
  EXPECT_TRUE(zero.sets[3].empty());
  EXPECT_TRUE(zero.sets[1].empty());
  EXPECT_TRUE(zero.undetermined.empty());
  const auto nonzero = run(0.5);
  EXPECT_TRUE(nonzero.sets[2].empty());
  EXPECT_TRUE(nonzero.undetermined.empty());
  const auto close = run(1.5e-3);
  EXPECT_TRUE(close.sets[2].empty());
  EXPECT_EQ(close.undetermined, std::vector<int>{0});
  EXPECT_THROW(classify_H_sets(s, 10.0, {}), ExtractionError);
}

TEST(Classification, ConvexCornersInFirstSet) {
  // lambda = 1.2 lies in J^1 for large p and is kept in H^1 regardless of the coefficients.
  const double w = pi / 1.2;
  const auto d = build_domain({{0, 0}, {1, 0}, {std::cos(w), std::sin(w)}});
  const auto c = classify_H_sets(d, 10.0, {manual(0, 1.2, {1}, {1.0})});
  EXPECT_EQ(c.sets[1], CornerSet{0});
}

TEST(ControlCoefficients, FollowExtraction) {
  const auto e = manual(2, 2.0 / 3.0, {1, 2}, {0.5, -0.3});
  const auto a = control_coefficients(e, 2.0, -1.0, 1.0);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_NEAR(a[0], -(2.0 / 3.0) * 0.5 / 2.0, 1e-15);
  EXPECT_NEAR(a[1], 2 * (2.0 / 3.0) * 0.3 / 2.0, 1e-15);
  for (double v : control_coefficients(e, 1.0, 0.5, 1.0)) EXPECT_EQ(v, 0.0);
}

TEST(Flatness, UndefinedAtConvexCornerWithZeroInside) {
  Discretization d(triangulate(unit_square(), 1.0 / 16));
  const auto spec = box(-1, 1, TargetFunction::constant(1.0));
  const OptimalSolution sol = solve_constrained(ReducedProblem(d, spec));
  EXPECT_THROW(flatness_diagnostic(d, spec, sol, 0, manual(0, 2.0, {1}, {0.0})), GeometryError);
}

TEST(Flatness, PositiveLowerBoundIsFlatEverywhereNearConvexCorners) {
  Discretization d(triangulate(unit_square(), 1.0 / 16));
  const auto spec = box(1, 2, TargetFunction::constant(0.0));
  const OptimalSolution sol = solve_constrained(ReducedProblem(d, spec));
  for (int j = 0; j < 4; ++j) {
    const FlatnessReport f = flatness_diagnostic(d, spec, sol, j, manual(j, 2.0, {1}, {0.0}));
    EXPECT_EQ(f.verdict, FlatVerdict::flat_at_a) << j;
    EXPECT_GT(f.radius, 0.5 * d.domain().corner(j).cutoff_radius);
    EXPECT_TRUE(f.sign_consistent);
  }
}

TEST(Flatness, ReentrantCornerSitsOnUpperBound) {
  Discretization d(triangulate(l_shape(), 1.0 / 32, {{2, 1.0 / 3.0}}));
  const auto spec = box(-1, 1, TargetFunction::constant(1.0));
  const OptimalSolution sol = solve_constrained(ReducedProblem(d, spec));
  const ExtractionResult e = extract_coefficients(d.mesh(), sol.phi.values, 2);
  EXPECT_LT(e.coefficient(1), 0.0);
  const FlatnessReport f = flatness_diagnostic(d, spec, sol, 2, e);
  EXPECT_EQ(f.verdict, FlatVerdict::flat_at_b);
  EXPECT_EQ(f.expected_bound, 1);
  EXPECT_TRUE(f.sign_consistent);
  EXPECT_FALSE(f.contradiction);
  EXPECT_GT(f.outgoing.flat_nodes, 0);
  EXPECT_GT(f.incoming.flat_nodes, 0);
  EXPECT_GE(f.outgoing.radius, f.outgoing.node_radius);
  EXPECT_DOUBLE_EQ(f.radius, std::min(f.outgoing.radius, f.incoming.radius));
}

TEST(Structure, SubtractsPredictedTerms) {
  Discretization d(triangulate(l_shape(), 1.0 / 16, {{2, 0.5}}));
  const auto spec = box(-kInf, kInf, TargetFunction::constant(1.0));
  const double c = 0.4, lambda = 2.0 / 3.0;
  const std::vector<SingularControlTerm> terms{{2, 1, -lambda * c, false}};
  OptimalSolution sol;
  sol.u.values.resize(d.num_boundary());
  for (int b = 0; b < d.num_boundary(); ++b) {
    const Point x = d.mesh().nodes[d.trace().node[b]];
    sol.u.values[b] = (x == Point{0, 0} ? 0.0 : eval_control_terms(d.domain(), terms, x)) + 0.1;
  }
  ModeSets sets;
  sets[1] = {2};
  const StructureFit fit = structural_fit_control(d, spec, sol, {manual(2, lambda, {1}, {c})}, sets, 2);
  ASSERT_EQ(fit.terms.size(), 1u);
  EXPECT_NEAR(fit.terms[0].coefficient, -lambda * c, 1e-15);
  ASSERT_GE(fit.radii.size(), 3u);
  for (std::size_t k = 0; k < fit.radii.size(); ++k) {
    EXPECT_NEAR(fit.max_remainder[k], 0.1, 1e-12);
    EXPECT_NEAR(fit.osc_remainder[k], 0.0, 1e-12);
    EXPECT_GT(fit.max_control[k], 0.1);
  }
  EXPECT_LT(fit.holder_remainder, 1e-12);
  EXPECT_GT(fit.holder_control, 0.1);
}

TEST(WedgeComparison, NonJumpDataOnSquare) {
  SingularBoundaryData data;
  data.non_jump.push_back({0, 1.5, 1.0});
  for (double h : {1.0 / 16, 1.0 / 32}) {
    Discretization d(triangulate(unit_square(), h, {{0, 0.5}}));
    const Lemma25Report rep = verify_lemma25(d, data, 0);
    ASSERT_EQ(rep.radii.size(), 3u);
    EXPECT_LT(rep.max_remainder[1], rep.max_wedge[1]);
    EXPECT_LT(rep.max_remainder[2], rep.max_wedge[2]);
    EXPECT_LT(rep.corner_jump, 1e-3);
    EXPECT_LT(rep.max_remainder[2], 0.5 * rep.max_remainder[0]);
  }
}

TEST(WedgeComparison, JumpDataOnLShape) {
  SingularBoundaryData data;
  data.jump.push_back({2, 1.0 / 3.0, 1.0});
  Discretization d(triangulate(l_shape(), 1.0 / 16, {{2, 0.5}}));
  const Lemma25Report rep = verify_lemma25(d, data, 2);
  EXPECT_LT(rep.max_remainder[1], rep.max_wedge[1]);
  EXPECT_LT(rep.max_remainder[2], rep.max_wedge[2]);
  EXPECT_GT(rep.max_wedge[2], 0.0);
}

TEST(WedgeComparison, ResonantDataRejected) {
  SingularBoundaryData data;
  data.non_jump.push_back({2, 4.0 / 3.0, 1.0});
  Discretization d(triangulate(l_shape(), 0.25));
  EXPECT_THROW(verify_lemma25(d, data, 2), GeometryError);
}

TEST(BlowupSlope, PowerLaw) {
  Discretization d(triangulate(l_shape(), 1.0 / 16, {{2, 0.5}}));
  Vec u(d.num_boundary());
  for (int b = 0; b < d.num_boundary(); ++b) {
    const double r = norm(d.mesh().nodes[d.trace().node[b]]);
    u[b] = r > 0.0 ? 3.0 * std::pow(r, -1.0 / 3.0) : 0.0;
  }
  const BlowupFit f = boundary_blowup_slope(d, u, 2, 1e-4, 1e-1);
  EXPECT_NEAR(f.slope, -1.0 / 3.0, 1e-12);
  EXPECT_GE(f.samples, 3);
  EXPECT_THROW(boundary_blowup_slope(d, u, 2, 1e-1, 1e-4), Error);
  EXPECT_THROW(boundary_blowup_slope(d, u, 2, 1e-12, 2e-12), ExtractionError);
}

TEST(RateEstimate, Orders) {
  const auto r = rate_estimate({1.0 / 8, 1.0 / 16, 1.0 / 32}, {1e-1, 2.5e-2, 6.25e-3});
  EXPECT_NEAR(r.order, 2.0, 1e-12);
  EXPECT_TRUE(r.monotone);
  EXPECT_FALSE(r.warning);
  const auto c = rate_estimate({1.0 / 8, 1.0 / 16, 1.0 / 32}, {0.3, 0.3, 0.3});
  EXPECT_EQ(c.order, 0.0);
  EXPECT_TRUE(c.warning);
  const auto up = rate_estimate({1.0 / 8, 1.0 / 16, 1.0 / 32}, {0.1, 0.2, 0.05});
  EXPECT_FALSE(up.monotone);
  EXPECT_TRUE(up.warning);
  EXPECT_TRUE(rate_estimate({1, 0.5, 0.25}, {1.0, 0.0, 1.0}).warning);
  EXPECT_THROW(rate_estimate({1, 0.5}, {1, 0.5}), Error);
}
