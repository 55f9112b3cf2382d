#pragma once

// Plain CSV output for fields and tables. Numbers are written with %.17g so
// that repeated runs produce byte-identical files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "fem.hpp"
#include "mesh.hpp"

namespace dclab {

inline std::string fmt_num(double v, const char* spec = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

class CsvWriter {
public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
      : out_(path), columns_(header.size()), path_(path) {
    if (!out_) throw Error("cannot write " + path.string());
    write_row(header);
  }

  void row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(fmt_num(v));
    write_row(cells);
  }

  void row(const std::vector<std::string>& cells) { write_row(cells); }

private:
  void write_row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw Error("column count mismatch in " + path_.string());
    for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << cells[k];
    out_ << '\n';
  }

  std::ofstream out_;
  std::size_t columns_;
  std::filesystem::path path_;
};

/// One row per boundary node: position, side, arc length and the given
/// boundary fields.
inline void write_boundary_csv(const std::filesystem::path& path, const Discretization& disc,
                               const std::vector<std::pair<std::string, const Vec*>>& fields,
                               std::optional<int> corner = std::nullopt) {
  std::vector<std::string> header{"b", "node", "x", "y", "side", "arc", "global_arc"};
  if (corner) header.push_back("r");
  for (const auto& [name, v] : fields) {
    if (v->size() != disc.num_boundary()) throw Error("boundary field " + name + " has the wrong size");
    header.push_back(name);
  }
  CsvWriter w(path, header);
  const BoundaryTrace& tr = disc.trace();
  for (int b = 0; b < tr.size(); ++b) {
    const Point x = disc.mesh().nodes[tr.node[b]];
    std::vector<double> row{double(b), double(tr.node[b]), x.x, x.y, double(tr.side[b]), tr.arc[b],
                            tr.global_arc[b]};
    if (corner) row.push_back(distance(x, disc.domain().vertex(*corner)));
    for (const auto& [name, v] : fields) row.push_back((*v)[b]);
    w.row(row);
  }
}

/// One row per mesh node with the given nodal fields.
inline void write_nodal_csv(const std::filesystem::path& path, const TriMesh& m,
                            const std::vector<std::pair<std::string, const Vec*>>& fields) {
  std::vector<std::string> header{"node", "x", "y"};
  for (const auto& [name, v] : fields) {
    if (v->size() != m.num_nodes()) throw Error("nodal field " + name + " has the wrong size");
    header.push_back(name);
  }
  CsvWriter w(path, header);
  for (int i = 0; i < m.num_nodes(); ++i) {
    std::vector<double> row{double(i), m.nodes[i].x, m.nodes[i].y};
    for (const auto& [name, v] : fields) row.push_back((*v)[i]);
    w.row(row);
  }
}

}  // namespace dclab
