#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dclab/mesh.hpp"

using namespace dclab;

namespace {

double total_area(const TriMesh& m) {
  double a = 0.0;
  for (int t = 0; t < m.num_triangles(); ++t) a += m.area(t);
  return a;
}

int count_lines(const std::filesystem::path& p) {
  std::ifstream f(p);
  int n = 0;
  std::string line;
  while (std::getline(f, line)) ++n;
  return n;
}

double corner_edge(const TriMesh& m, int j) {
  const int c = m.corner_nodes[j];
  double e = 1e300;
  for (const auto& be : m.boundary_edges)
    if (be.nodes[0] == c || be.nodes[1] == c) e = std::min(e, distance(m.nodes[be.nodes[0]], m.nodes[be.nodes[1]]));
  return e;
}

}  // namespace

TEST(Structured, SquareCountsAndRefinement) {
  const TriMesh m = triangulate(unit_square(), 0.5);
  EXPECT_TRUE(m.structured);
  EXPECT_EQ(m.num_triangles(), 8);
  EXPECT_EQ(m.num_nodes(), 9);
  const TriMesh r = refine_uniform(m);
  EXPECT_EQ(r.num_triangles(), 32);
  EXPECT_EQ(r.num_nodes(), 25);
  EXPECT_EQ(r.level, 1);
  EXPECT_TRUE(r.structured);
}

TEST(Structured, NonObtuseRightTriangles) {
  for (const auto& d : {unit_square(), l_shape()}) {
    const TriMesh m = triangulate(d, 0.125);
    EXPECT_TRUE(m.structured);
    EXPECT_TRUE(m.non_obtuse);
    EXPECT_NEAR(m.min_angle, pi / 4, 1e-12);
    EXPECT_NEAR(m.h, 0.125 * std::sqrt(2.0), 1e-12);
  }
}

TEST(Structured, RequiresGridVertices) {
  MeshOptions o;
  o.h = 0.3;
  o.method = MeshMethod::structured;
  EXPECT_THROW(triangulate(unit_square(), o), MeshError);
  o.h = 0.25;
  o.grading[0] = 0.5;
  EXPECT_THROW(triangulate(unit_square(), o), MeshError);
}

TEST(Mesh, AreaAndOrientation) {
  std::vector<TriMesh> meshes;
  meshes.push_back(triangulate(unit_square(), 0.1));
  meshes.push_back(triangulate(l_shape(), 0.125));
  meshes.push_back(triangulate(l_shape(), 0.125, {{2, 0.5}}));
  meshes.push_back(triangulate(sector(1.5 * pi, 32), 0.1));
  meshes.push_back(triangulate(build_domain({{0, 0}, {1, 0}, {0.2, 0.9}}), 0.07));
  for (const auto& m : meshes) {
    EXPECT_NEAR(total_area(m), m.geometry().area(), 1e-12 * m.geometry().area()) << m.geometry().name();
    for (int t = 0; t < m.num_triangles(); ++t) ASSERT_GT(m.area(t), 0.0);
  }
}

TEST(Mesh, DelaunayQuality) {
  for (const auto& m : {triangulate(l_shape(), 0.1, {{2, 0.5}}), triangulate(sector(1.5 * pi, 64), 0.08, {{0, 0.5}}),
                        triangulate(build_domain({{0, 0}, {1, 0}, {0.2, 0.9}}), 0.05)}) {
    EXPECT_FALSE(m.structured);
    EXPECT_GE(m.min_angle * 180.0 / pi, 20.0);
  }
}

TEST(Mesh, CornerNodesSitOnVertices) {
  const auto d = l_shape();
  const TriMesh m = triangulate(d, 0.1, {{2, 0.4}});
  ASSERT_EQ(static_cast<int>(m.corner_nodes.size()), d.size());
  for (int j = 0; j < d.size(); ++j) EXPECT_EQ(m.nodes[m.corner_nodes[j]], d.vertex(j));
}

TEST(Mesh, GradedFirstLayer) {
  const auto d = l_shape();
  const double G = 4.0 * d.corner(2).cutoff_radius;
  for (double mu : {0.5, 1.0 / 3.0}) {
    for (double h : {0.1, 0.05}) {
      MeshOptions o;
      o.h = h;
      o.grading[2] = mu;
      const TriMesh m = triangulate(d, o);
      const double expected = G * std::pow(h / G, 1.0 / mu);
      EXPECT_NEAR(detail::min_graded_size(d, o), expected, 1e-15);
      const double e = corner_edge(m, 2);
      EXPECT_LT(e, 3.0 * expected) << "mu " << mu << " h " << h;
      EXPECT_GT(e, 0.2 * expected) << "mu " << mu << " h " << h;
      // Convex corners stay at the nominal size.
      EXPECT_GT(corner_edge(m, 0), 0.3 * h);
    }
  }
}

TEST(Mesh, GradedRefinementRegenerates) {
  const TriMesh m = triangulate(l_shape(), 0.1, {{2, 0.5}});
  const TriMesh r = refine_uniform(m);
  EXPECT_EQ(r.level, 1);
  EXPECT_NEAR(r.recipe.h, 0.05, 1e-15);
  EXPECT_LT(corner_edge(r, 2), 0.5 * corner_edge(m, 2));
}

TEST(Mesh, Deterministic) {
  const TriMesh a = triangulate(sector(1.5 * pi, 64), 0.1, {{0, 0.5}});
  const TriMesh b = triangulate(sector(1.5 * pi, 64), 0.1, {{0, 0.5}});
  ASSERT_EQ(a.num_nodes(), b.num_nodes());
  ASSERT_EQ(a.num_triangles(), b.num_triangles());
  for (int i = 0; i < a.num_nodes(); ++i) EXPECT_EQ(a.nodes[i], b.nodes[i]);
  for (int t = 0; t < a.num_triangles(); ++t) EXPECT_EQ(a.triangles[t], b.triangles[t]);
}

TEST(Mesh, BadOptions) {
  EXPECT_THROW(triangulate(unit_square(), 0.0), MeshError);
  EXPECT_THROW(triangulate(unit_square(), -0.1), MeshError);
  EXPECT_THROW(triangulate(unit_square(), 0.1, {{0, 0.0}}), MeshError);
  EXPECT_THROW(triangulate(unit_square(), 0.1, {{0, 1.5}}), MeshError);
}

TEST(BoundaryTrace, PerimeterAndOrdering) {
  for (const auto& m : {triangulate(unit_square(), 0.125), triangulate(l_shape(), 0.1, {{2, 0.5}})}) {
    const BoundaryTrace bt = boundary_trace_space(m);
    const double P = m.geometry().perimeter();
    EXPECT_NEAR(bt.lumped.sum(), P, 1e-12);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(bt.size());
    EXPECT_NEAR(one.dot(bt.mass * one), P, 1e-12);
    EXPECT_EQ(bt.size(), static_cast<int>(m.boundary_edges.size()));
    EXPECT_EQ(bt.node[0], m.corner_nodes[0]);
    for (int b = 1; b < bt.size(); ++b) EXPECT_GT(bt.global_arc[b], bt.global_arc[b - 1]);
    for (int j = 0; j < m.geometry().size(); ++j) {
      const auto side = bt.side_nodes(j);
      ASSERT_GE(side.size(), 2u);
      EXPECT_EQ(bt.node[side.front()], m.corner_nodes[j]);
      EXPECT_EQ(bt.node[side.back()], m.corner_nodes[(j + 1) % m.geometry().size()]);
    }
    for (int i = 0; i < m.num_nodes(); ++i)
      if (bt.index_of[i] >= 0) {
        EXPECT_EQ(bt.node[bt.index_of[i]], i);
      }
  }
}

TEST(BoundaryTrace, MassIntegratesLinearFunction) {
  const TriMesh m = triangulate(unit_square(), 0.125);
  const BoundaryTrace bt = boundary_trace_space(m);
  Eigen::VectorXd x(bt.size()), one = Eigen::VectorXd::Ones(bt.size());
  for (int b = 0; b < bt.size(); ++b) x[b] = m.nodes[bt.node[b]].x;
  // Integral of x over the whole boundary: 1/2 + 1 + 1/2 + 0.
  EXPECT_NEAR(one.dot(bt.mass * x), 2.0, 1e-13);
  EXPECT_NEAR(bt.lumped.dot(x), 2.0, 1e-13);
}

TEST(MeshIO, CsvAndVtk) {
  const TriMesh m = triangulate(l_shape(), 0.25);
  const auto dir = std::filesystem::temp_directory_path() / "dclab_test_mesh_io";
  std::filesystem::remove_all(dir);
  write_mesh_csv(m, dir);
  EXPECT_EQ(count_lines(dir / "nodes.csv"), m.num_nodes() + 1);
  EXPECT_EQ(count_lines(dir / "triangles.csv"), m.num_triangles() + 1);
  EXPECT_EQ(count_lines(dir / "boundary_edges.csv"), static_cast<int>(m.boundary_edges.size()) + 1);
  std::vector<double> f(m.num_nodes(), 1.0);
  write_vtk(m, dir / "mesh.vtk", {{"one", f}});
  EXPECT_GT(count_lines(dir / "mesh.vtk"), m.num_nodes() + m.num_triangles());
  EXPECT_THROW(write_vtk(m, dir / "bad.vtk", {{"short", {1.0}}}), Error);
  std::filesystem::remove_all(dir);
}
