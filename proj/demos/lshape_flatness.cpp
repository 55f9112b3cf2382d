// Constrained L-shape problem on one graded mesh: where does the optimal
// control sit on a bound, and which bound?
//
//   lshape_flatness [h] [mu]      defaults: h = 1/32, mu = 1/3

#include <cstdio>
#include <cstdlib>

#include "dclab/dclab.hpp"

using namespace dclab;

int main(int argc, char** argv) {
  const double h = argc > 1 ? std::atof(argv[1]) : 1.0 / 32;
  const double mu = argc > 2 ? std::atof(argv[2]) : 1.0 / 3;
  const int corner = 2;

  MeshOptions mo;
  mo.h = h;
  mo.grading = {{corner, mu}};
  Discretization disc(triangulate(l_shape(), mo));
  std::printf("mesh: %d nodes, %d on the boundary\n", disc.num_nodes(), disc.num_boundary());

  ControlProblemSpec spec;
  spec.nu = 1.0;
  spec.a = -1.0;
  spec.b = 1.0;
  spec.target = TargetFunction::constant(1.0);
  ReducedProblem problem(disc, spec);
  const OptimalSolution sol = solve_constrained(problem);
  std::printf("PDAS: %d iterations, KKT %.2e, J = %.10f\n", sol.iterations, sol.kkt.max(), sol.objective);

  const ExtractionResult ext = extract_coefficients(disc.mesh(), sol.phi.values, corner);
  std::printf("c_1 = %.6f, c_2 = %.6f (fit residual %.1e)\n", ext.coefficient(1), ext.coefficient(2), ext.residual);

  const FlatnessReport f = flatness_diagnostic(disc, spec, sol, corner, ext);
  std::printf("verdict %s, expected bound %s\n", to_string(f.verdict), f.expected_bound > 0 ? "b" : "a");
  std::printf("flat up to r = %.5f on the outgoing side (%d nodes), r = %.5f on the incoming side (%d nodes)\n",
              f.outgoing.radius, f.outgoing.flat_nodes, f.incoming.radius, f.incoming.flat_nodes);

  // Control and flux near the corner, outgoing side.
  std::printf("\n%10s %12s %12s\n", "r", "u", "flux/nu");
  const auto side = disc.trace().side_nodes(corner);
  for (std::size_t k = 0; k < side.size() && k < 12; ++k) {
    const int b = side[k];
    const double r = distance(disc.mesh().nodes[disc.trace().node[b]], disc.domain().vertex(corner));
    std::printf("%10.5f %12.8f %12.6f\n", r, sol.u[b], sol.flux[b] / spec.nu);
  }
  write_boundary_csv("lshape_flatness.csv", disc, {{"u", &sol.u.values}, {"flux", &sol.flux.values}}, corner);
  std::printf("\nboundary values written to lshape_flatness.csv\n");
}
