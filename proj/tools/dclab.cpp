// dclab command line: run configurations and presets, mesh domains.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "dclab/dclab.hpp"

namespace {

dclab::DomainConfig domain_by_name(const std::string& spec) {
  dclab::DomainConfig c;
  // sector[:degrees[:arc segments]]
  if (spec.rfind("sector", 0) == 0) {
    c.type = "sector";
    if (spec.size() > 6) {
      if (spec[6] != ':') throw dclab::ConfigError("expected sector:<degrees>[:<segments>]");
      const std::string rest = spec.substr(7);
      const auto colon = rest.find(':');
      try {
        c.omega = std::stod(rest.substr(0, colon)) * dclab::pi / 180.0;
        if (colon != std::string::npos) c.arc_segments = std::stoi(rest.substr(colon + 1));
      } catch (const std::exception&) {
        throw dclab::ConfigError("cannot parse sector argument '" + spec + "'");
      }
    }
    return c;
  }
  if (spec == "square" || spec == "lshape") {
    c.type = spec;
    return c;
  }
  // Anything else is a JSON file holding a domain object.
  std::ifstream in(spec);
  if (!in) throw dclab::ConfigError("unknown domain '" + spec + "' (square, lshape, sector[:deg[:n]] or a JSON file)");
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw dclab::ConfigError(spec + ":" + std::to_string(dclab::detail::line_of(ss.str(), e.byte)) + ": " + e.what());
  }
  return dclab::detail::parse_domain(j, "domain");
}

int finish(const dclab::RunReport& rep) {
  std::cout << rep.summary;
  if (rep.config.output.empty()) return rep.exit_code;
  std::cout << "\noutput written to " << rep.config.output.string() << '\n';
  return rep.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dclab: Dirichlet boundary control on polygons"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run an experiment from a JSON configuration");
  run->add_option("config", config_path, "configuration file")->required();

  std::string preset_name, out_dir;
  int levels = 0;
  auto* preset = app.add_subcommand("preset", "run a named preset");
  preset->add_option("name", preset_name, "preset name (see 'dclab presets')")->required();
  preset->add_option("--levels", levels, "number of refinement levels")->check(CLI::PositiveNumber);
  preset->add_option("--out", out_dir, "output directory");

  std::string domain_spec, mesh_out;
  double h = 0.0;
  std::vector<std::string> grading;
  auto* mesh = app.add_subcommand("mesh", "triangulate a domain and write its mesh");
  mesh->set_help_flag("--help", "print this help message and exit");
  mesh->add_option("domain", domain_spec, "square, lshape, sector[:deg[:n]] or a JSON domain file")->required();
  mesh->add_option("--h", h, "mesh size")->required()->check(CLI::PositiveNumber);
  mesh->add_option("--grade", grading, "corner:mu, repeatable");
  mesh->add_option("--out", mesh_out, "directory for nodes.csv, triangles.csv, boundary_edges.csv and mesh.vtk");

  app.add_subcommand("presets", "list the available presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const dclab::ExperimentConfig cfg = dclab::load_config(config_path);
      return finish(dclab::run(cfg, {true, &std::cerr}));
    }
    if (*preset) {
      dclab::ExperimentConfig cfg = dclab::preset_config(preset_name);
      if (levels > 0) cfg.levels = levels;
      if (!out_dir.empty()) cfg.output = out_dir;
      return finish(dclab::run(cfg, {true, &std::cerr}));
    }
    if (*mesh) {
      const dclab::PolygonalDomain d = dclab::make_domain(domain_by_name(domain_spec));
      dclab::MeshOptions o;
      o.h = h;
      for (const auto& g : grading) {
        const auto colon = g.find(':');
        if (colon == std::string::npos) throw dclab::ConfigError("--grade expects corner:mu, got '" + g + "'");
        try {
          o.grading[std::stoi(g.substr(0, colon))] = std::stod(g.substr(colon + 1));
        } catch (const std::exception&) {
          throw dclab::ConfigError("--grade expects corner:mu, got '" + g + "'");
        }
      }
      const dclab::TriMesh m = dclab::triangulate(d, o);
      std::printf("domain %s: %d nodes, %d triangles, %zu boundary edges\n", d.name().c_str(), m.num_nodes(),
                  m.num_triangles(), m.boundary_edges.size());
      std::printf("longest edge %.6g, minimum angle %.4g deg, %s, %s\n", m.h, m.min_angle * 180.0 / dclab::pi,
                  m.structured ? "structured" : "delaunay", m.non_obtuse ? "non-obtuse" : "has obtuse angles");
      for (int j = 0; j < d.size(); ++j) {
        const auto& c = d.corner(j);
        if (c.smooth) continue;
        std::printf("corner %d at (%.6g, %.6g): omega %.6g, lambda %.6g, R %.6g\n", j, c.position.x, c.position.y,
                    c.angle, c.lambda, c.cutoff_radius);
      }
      if (!mesh_out.empty()) {
        dclab::write_mesh_csv(m, mesh_out);
        dclab::write_vtk(m, std::filesystem::path(mesh_out) / "mesh.vtk");
        std::printf("written to %s\n", mesh_out.c_str());
      }
      return 0;
    }
    for (const auto& p : dclab::list_presets()) std::printf("%-22s %s\n", p.name.c_str(), p.description.c_str());
    return 0;
  } catch (const dclab::ControlSolverError& e) {
    std::fprintf(stderr, "dclab: solver failure: %s (best KKT residual %.3e)\n", e.what(), e.best().kkt.max());
    return 3;
  } catch (const std::exception& e) {
    const int code = dclab::exit_code_for(e);
    std::fprintf(stderr, "dclab: %s: %s\n", code == 2 ? "configuration error" : "solver failure", e.what());
    return code;
  }
}
