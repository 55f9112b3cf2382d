#pragma once

// Experiment driver: JSON configuration, refinement ladders, per-level CSV
// output, a plain-text summary and the named presets.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "control.hpp"
#include "error.hpp"
#include "fem.hpp"
#include "geometry.hpp"
#include "io.hpp"
#include "mesh.hpp"
#include "quadrature.hpp"
#include "singular.hpp"

namespace dclab {

struct DomainConfig {
  std::string type = "lshape";  // square, lshape, sector, polygon
  double omega = 1.5 * pi;      // sector only
  int arc_segments = 64;        // sector only
  std::vector<Point> vertices;  // polygon only
  std::map<int, double> cutoff_radius;
};

struct TargetConfig {
  std::string type = "constant";  // constant, skew, csv
  double value = 0.0;
  int corner = 0;
  std::string path;
};

struct Lemma25Case {
  std::string label;
  DomainConfig domain;
  int corner = 0;
  double eta = 1.0;
  double amplitude = 1.0;
  bool jump = false;
  std::map<int, double> grading;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string description;
  DomainConfig domain;
  double nu = 1.0, a = -kInf, b = kInf;
  TargetConfig target;
  double h0 = 0.125;
  int levels = 3;
  std::map<int, double> grading;
  MeshMethod method = MeshMethod::automatic;
  std::vector<std::string> stages{"constrained"};
  std::string primary;          // "constrained" or "unconstrained"; empty picks the first solve stage
  std::optional<int> corner;    // focus corner; default: smallest lambda
  double s_star = 10.0;
  double slope_lo = 1e-4, slope_hi = 1e-2;
  int max_principle_trials = 5;
  std::vector<Lemma25Case> lemma25;
  std::filesystem::path output = "dclab-out";
  std::uint64_t seed = 1;
  SolverOptions solver;

  bool has_stage(const std::string& s) const {
    return std::find(stages.begin(), stages.end(), s) != stages.end();
  }
  void validate() const;
};

inline const std::vector<std::string>& known_stages() {
  static const std::vector<std::string> s{"constrained", "extract",   "flatness", "lemma25",     "max-principle",
                                          "slope",       "structure", "unconstrained", "uniqueness"};
  return s;
}

inline void ExperimentConfig::validate() const {
  if (levels < 1) throw ConfigError("field 'mesh.levels': ladder needs at least one level");
  if (!(h0 > 0.0)) throw ConfigError("field 'mesh.h0': must be positive");
  if (stages.empty()) throw ConfigError("field 'stages': nothing to run");
  for (const auto& s : stages)
    if (std::find(known_stages().begin(), known_stages().end(), s) == known_stages().end())
      throw ConfigError("field 'stages': unknown stage '" + s + "'");
  const bool con = has_stage("constrained"), unc = has_stage("unconstrained");
  if (!primary.empty() && primary != "constrained" && primary != "unconstrained")
    throw ConfigError("field 'primary': expected \"constrained\" or \"unconstrained\"");
  if (!primary.empty() && !has_stage(primary))
    throw ConfigError("field 'primary': stage '" + primary + "' is not listed");
  for (const char* s : {"extract", "structure", "max-principle", "uniqueness"})
    if (has_stage(s) && !con && !unc) throw ConfigError(std::string("stage '") + s + "' needs a solve stage");
  if (has_stage("flatness") && !con) throw ConfigError("stage 'flatness' needs the constrained stage");
  if ((has_stage("flatness") || has_stage("structure")) && !has_stage("extract"))
    throw ConfigError("stages 'flatness' and 'structure' need the extract stage");
  if (has_stage("slope") && !unc) throw ConfigError("stage 'slope' needs the unconstrained stage");
  if (has_stage("slope") && !(0.0 < slope_lo && slope_lo < slope_hi))
    throw ConfigError("field 'slope_window': expected 0 < lo < hi");
  if (has_stage("lemma25") && lemma25.empty()) throw ConfigError("stage 'lemma25' needs at least one case");
  if (max_principle_trials < 0) throw ConfigError("field 'max_principle_trials': must be non-negative");
  if (!(nu > 0.0)) throw ConfigError("field 'problem.nu': must be positive");
  if (!(a < b)) throw ConfigError("fields 'problem.a', 'problem.b': need a < b");
  if (target.type != "constant" && target.type != "skew" && target.type != "csv")
    throw ConfigError("field 'problem.target.type': unknown target '" + target.type + "'");
  if (!(s_star >= 2.0)) throw ConfigError("field 's_star': must be at least 2");
}

// ---------------------------------------------------------------------------
// Construction from the configuration.

inline PolygonalDomain make_domain(const DomainConfig& c) {
  DomainOptions o;
  o.cutoff_radius = c.cutoff_radius;
  if (c.type == "square") {
    o.name = "unit-square";
    return build_domain({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, o);
  }
  if (c.type == "lshape") {
    o.name = "l-shape";
    return build_domain({{-1, -1}, {0, -1}, {0, 0}, {1, 0}, {1, 1}, {-1, 1}}, o);
  }
  if (c.type == "sector") {
    const PolygonalDomain s = sector(c.omega, c.arc_segments);
    if (c.cutoff_radius.empty()) return s;
    DomainOptions so;
    so.name = s.name();
    so.cutoff_radius = c.cutoff_radius;
    for (int j = 0; j < s.size(); ++j)
      if (s.corner(j).smooth) so.smooth_vertices.push_back(j);
    return build_domain({s.vertices().begin(), s.vertices().end()}, so);
  }
  if (c.type == "polygon") {
    o.name = "polygon";
    return build_domain(c.vertices, o);
  }
  throw ConfigError("field 'domain.type': unknown domain '" + c.type + "'");
}

inline TargetFunction make_target(const TargetConfig& t, const PolygonalDomain& d) {
  if (t.type == "constant") return TargetFunction::constant(t.value);
  if (t.type == "skew") {
    if (t.corner < 0 || t.corner >= d.size()) throw ConfigError("field 'problem.target.corner': out of range");
    return TargetFunction::skew(d, t.corner);
  }
  if (t.type == "csv") return TargetFunction::from_csv(t.path);
  throw ConfigError("field 'problem.target.type': unknown target '" + t.type + "'");
}

/// Non-smooth corner with the smallest lambda (lowest index on ties).
inline int default_focus_corner(const PolygonalDomain& d) {
  int best = -1;
  for (int j = 0; j < d.size(); ++j) {
    if (d.corner(j).smooth) continue;
    if (best < 0 || d.corner(j).lambda < d.corner(best).lambda - 1e-12) best = j;
  }
  if (best < 0) throw ConfigError("domain has no corners");
  return best;
}

// ---------------------------------------------------------------------------
// JSON parsing with field-path diagnostics.

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError("field '" + where + "': expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* key : keys) ok |= k == key;
    if (!ok) throw ConfigError("field '" + (where.empty() ? k : where + "." + k) + "': unknown key");
  }
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError("field '" + where + "': expected a number");
  return j.get<double>();
}

inline int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError("field '" + where + "': expected an integer");
  return j.get<int>();
}

inline std::string str_field(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError("field '" + where + "': expected a string");
  return j.get<std::string>();
}

/// A bound: number, null or "-inf"/"inf".
inline double bound(const json& j, const std::string& where, double if_null) {
  if (j.is_null()) return if_null;
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  return number(j, where);
}

inline std::map<int, double> corner_map(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError("field '" + where + "': expected an object keyed by corner index");
  std::map<int, double> out;
  for (const auto& [k, v] : j.items()) {
    int idx = 0;
    try {
      std::size_t used = 0;
      idx = std::stoi(k, &used);
      if (used != k.size()) throw std::invalid_argument(k);
    } catch (const std::exception&) {
      throw ConfigError("field '" + where + "': key '" + k + "' is not a corner index");
    }
    out[idx] = number(v, where + "." + k);
  }
  return out;
}

inline DomainConfig parse_domain(const json& j, const std::string& where) {
  if (j.is_string()) {
    DomainConfig c;
    c.type = j.get<std::string>();
    return c;
  }
  reject_unknown(j, where, {"type", "omega", "omega_deg", "arc_segments", "vertices", "cutoff_radius"});
  DomainConfig c;
  if (!j.contains("type")) throw ConfigError("field '" + where + ".type': missing");
  c.type = str_field(j["type"], where + ".type");
  if (j.contains("omega") && j.contains("omega_deg"))
    throw ConfigError("field '" + where + "': give omega or omega_deg, not both");
  if (j.contains("omega")) c.omega = number(j["omega"], where + ".omega");
  if (j.contains("omega_deg")) c.omega = number(j["omega_deg"], where + ".omega_deg") * pi / 180.0;
  if (j.contains("arc_segments")) c.arc_segments = integer(j["arc_segments"], where + ".arc_segments");
  if (j.contains("vertices")) {
    const json& v = j["vertices"];
    if (!v.is_array()) throw ConfigError("field '" + where + ".vertices': expected an array");
    for (std::size_t k = 0; k < v.size(); ++k) {
      const std::string w = where + ".vertices[" + std::to_string(k) + "]";
      if (!v[k].is_array() || v[k].size() != 2) throw ConfigError("field '" + w + "': expected [x, y]");
      c.vertices.push_back({number(v[k][0], w), number(v[k][1], w)});
    }
  }
  if (c.type == "polygon" && c.vertices.empty())
    throw ConfigError("field '" + where + ".vertices': required for a polygon");
  if (j.contains("cutoff_radius")) c.cutoff_radius = corner_map(j["cutoff_radius"], where + ".cutoff_radius");
  return c;
}

inline std::size_t line_of(const std::string& text, std::size_t byte) {
  return 1 + std::count(text.begin(), text.begin() + std::min(byte, text.size()), '\n');
}

}  // namespace detail

/// Parses a configuration document; `source` names it in diagnostics.
inline ExperimentConfig parse_config(const std::string& text, const std::string& source = "config") {
  using detail::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ":" + std::to_string(detail::line_of(text, e.byte)) + ": " + e.what());
  }
  ExperimentConfig c;
  try {
    detail::reject_unknown(j, "", {"name", "description", "domain", "problem", "mesh", "stages", "primary", "corner",
                                   "s_star", "slope_window", "max_principle_trials", "lemma25", "output", "seed",
                                   "solver"});
    if (j.contains("name")) c.name = detail::str_field(j["name"], "name");
    if (j.contains("description")) c.description = detail::str_field(j["description"], "description");
    if (j.contains("domain")) c.domain = detail::parse_domain(j["domain"], "domain");
    if (j.contains("problem")) {
      const json& p = j["problem"];
      detail::reject_unknown(p, "problem", {"nu", "a", "b", "target"});
      if (p.contains("nu")) c.nu = detail::number(p["nu"], "problem.nu");
      if (p.contains("a")) c.a = detail::bound(p["a"], "problem.a", -kInf);
      if (p.contains("b")) c.b = detail::bound(p["b"], "problem.b", kInf);
      if (p.contains("target")) {
        const json& t = p["target"];
        if (t.is_number()) {
          c.target.value = t.get<double>();
        } else {
          detail::reject_unknown(t, "problem.target", {"type", "value", "corner", "path"});
          if (t.contains("type")) c.target.type = detail::str_field(t["type"], "problem.target.type");
          if (t.contains("value")) c.target.value = detail::number(t["value"], "problem.target.value");
          if (t.contains("corner")) c.target.corner = detail::integer(t["corner"], "problem.target.corner");
          if (t.contains("path")) c.target.path = detail::str_field(t["path"], "problem.target.path");
          if (c.target.type == "csv" && c.target.path.empty())
            throw ConfigError("field 'problem.target.path': required for a csv target");
        }
      }
    }
    if (j.contains("mesh")) {
      const json& m = j["mesh"];
      detail::reject_unknown(m, "mesh", {"h0", "levels", "grading", "method"});
      if (m.contains("h0")) c.h0 = detail::number(m["h0"], "mesh.h0");
      if (m.contains("levels")) c.levels = detail::integer(m["levels"], "mesh.levels");
      if (m.contains("grading")) c.grading = detail::corner_map(m["grading"], "mesh.grading");
      if (m.contains("method")) {
        const std::string s = detail::str_field(m["method"], "mesh.method");
        if (s == "auto") c.method = MeshMethod::automatic;
        else if (s == "structured") c.method = MeshMethod::structured;
        else if (s == "delaunay") c.method = MeshMethod::delaunay;
        else throw ConfigError("field 'mesh.method': expected auto, structured or delaunay");
      }
    }
    if (j.contains("stages")) {
      if (!j["stages"].is_array()) throw ConfigError("field 'stages': expected an array");
      c.stages.clear();
      for (std::size_t k = 0; k < j["stages"].size(); ++k)
        c.stages.push_back(detail::str_field(j["stages"][k], "stages[" + std::to_string(k) + "]"));
    }
    if (j.contains("primary")) c.primary = detail::str_field(j["primary"], "primary");
    if (j.contains("corner")) c.corner = detail::integer(j["corner"], "corner");
    if (j.contains("s_star")) c.s_star = detail::number(j["s_star"], "s_star");
    if (j.contains("slope_window")) {
      const json& w = j["slope_window"];
      if (!w.is_array() || w.size() != 2) throw ConfigError("field 'slope_window': expected [lo, hi]");
      c.slope_lo = detail::number(w[0], "slope_window[0]");
      c.slope_hi = detail::number(w[1], "slope_window[1]");
    }
    if (j.contains("max_principle_trials"))
      c.max_principle_trials = detail::integer(j["max_principle_trials"], "max_principle_trials");
    if (j.contains("lemma25")) {
      if (!j["lemma25"].is_array()) throw ConfigError("field 'lemma25': expected an array");
      for (std::size_t k = 0; k < j["lemma25"].size(); ++k) {
        const std::string w = "lemma25[" + std::to_string(k) + "]";
        const json& e = j["lemma25"][k];
        detail::reject_unknown(e, w, {"label", "domain", "corner", "eta", "amplitude", "jump", "grading"});
        Lemma25Case lc;
        lc.label = e.contains("label") ? detail::str_field(e["label"], w + ".label") : "case" + std::to_string(k);
        lc.domain = e.contains("domain") ? detail::parse_domain(e["domain"], w + ".domain") : c.domain;
        if (!e.contains("corner") || !e.contains("eta")) throw ConfigError("field '" + w + "': needs corner and eta");
        lc.corner = detail::integer(e["corner"], w + ".corner");
        lc.eta = detail::number(e["eta"], w + ".eta");
        if (e.contains("amplitude")) lc.amplitude = detail::number(e["amplitude"], w + ".amplitude");
        if (e.contains("jump")) {
          if (!e["jump"].is_boolean()) throw ConfigError("field '" + w + ".jump': expected true or false");
          lc.jump = e["jump"].get<bool>();
        }
        if (e.contains("grading")) lc.grading = detail::corner_map(e["grading"], w + ".grading");
        c.lemma25.push_back(lc);
      }
    }
    if (j.contains("output")) c.output = detail::str_field(j["output"], "output");
    if (j.contains("seed")) {
      if (!j["seed"].is_number_unsigned()) throw ConfigError("field 'seed': expected a non-negative integer");
      c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("solver")) {
      const json& s = j["solver"];
      detail::reject_unknown(s, "solver", {"max_iter", "pdas_iter_before_fallback", "kkt_tol", "cg_rel_tol"});
      if (s.contains("max_iter")) c.solver.max_iter = detail::integer(s["max_iter"], "solver.max_iter");
      if (s.contains("pdas_iter_before_fallback"))
        c.solver.pdas_iter_before_fallback =
            detail::integer(s["pdas_iter_before_fallback"], "solver.pdas_iter_before_fallback");
      if (s.contains("kkt_tol")) c.solver.kkt_tol = detail::number(s["kkt_tol"], "solver.kkt_tol");
      if (s.contains("cg_rel_tol")) c.solver.cg_rel_tol = detail::number(s["cg_rel_tol"], "solver.cg_rel_tol");
    }
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

// ---------------------------------------------------------------------------
// Presets.

struct PresetInfo {
  std::string name;
  std::string description;
};

namespace detail {

inline ExperimentConfig sector_preset(const std::string& name, const std::string& desc, bool skew, double a) {
  ExperimentConfig c;
  c.name = name;
  c.description = desc;
  c.domain.type = "sector";
  c.domain.omega = 1.5 * pi;
  c.domain.arc_segments = 64;
  c.nu = 1.0;
  c.a = a;
  c.b = 1.0;
  if (skew) {
    c.target.type = "skew";
    c.target.corner = 0;
  } else {
    c.target.value = 1.0;
  }
  c.h0 = 1.0 / 16;
  c.levels = 4;
  c.grading = {{0, 0.5}};
  c.corner = 0;
  c.stages = {"constrained", "extract", "flatness", "structure", "uniqueness"};
  return c;
}

inline std::map<std::string, ExperimentConfig> preset_table() {
  std::map<std::string, ExperimentConfig> t;
  t["case-a0"] = sector_preset("case-a0", "sector of angle 3pi/2, skew target, bounds [0, 1]", true, 0.0);
  t["ex38-skew"] =
      sector_preset("ex38-skew", "sector of angle 3pi/2, target +1/-1 across the apex bisector, bounds [-1, 1]", true, -1.0);
  t["ex38-symmetric"] = sector_preset("ex38-symmetric", "sector of angle 3pi/2, target 1, bounds [-1, 1]", false, -1.0);
  {
    ExperimentConfig c;
    c.name = "lemma25-check";
    c.description = "singular boundary data: r^1.5 at a square corner and chi r^(1/3) at the L-shape corner";
    c.domain.type = "square";
    c.h0 = 1.0 / 16;
    c.levels = 4;
    c.stages = {"lemma25"};
    Lemma25Case n1;
    n1.label = "n1-square";
    n1.domain.type = "square";
    n1.corner = 0;
    n1.eta = 1.5;
    n1.grading = {{0, 0.5}};
    Lemma25Case n2;
    n2.label = "n2-lshape";
    n2.domain.type = "lshape";
    n2.corner = 2;
    n2.eta = 1.0 / 3.0;
    n2.jump = true;
    n2.grading = {{2, 0.5}};
    c.lemma25 = {n1, n2};
    t[c.name] = c;
  }
  {
    ExperimentConfig c;
    c.name = "lshape-constrained";
    c.description = "L-shape, target 1, nu = 1, bounds [-1, 1]; flat neighbourhood of the re-entrant corner";
    c.domain.type = "lshape";
    c.nu = 1.0;
    c.a = -1.0;
    c.b = 1.0;
    c.target.value = 1.0;
    c.h0 = 1.0 / 16;
    c.levels = 4;
    c.grading = {{2, 1.0 / 3.0}};
    c.corner = 2;
    c.stages = {"constrained", "extract", "flatness", "structure", "uniqueness"};
    t[c.name] = c;
  }
  {
    ExperimentConfig c = t["lshape-constrained"];
    c.name = "lshape-unconstrained";
    c.description = "L-shape, target 1, nu = 1, no bounds; corner blow-up against the bounded constrained control";
    c.levels = 3;
    c.stages = {"unconstrained", "constrained", "extract", "slope", "structure"};
    c.primary = "unconstrained";
    t[c.name] = c;
  }
  {
    ExperimentConfig c;
    c.name = "square-smoke";
    c.description = "unit square, target 0; the optimal control vanishes";
    c.domain.type = "square";
    c.nu = 1.0;
    c.a = -1.0;
    c.b = 1.0;
    c.target.value = 0.0;
    c.h0 = 1.0 / 8;
    c.levels = 3;
    c.stages = {"constrained", "unconstrained", "max-principle", "uniqueness"};
    t[c.name] = c;
  }
  return t;
}

}  // namespace detail

/// Registered presets in alphabetical order.
inline std::vector<PresetInfo> list_presets() {
  std::vector<PresetInfo> out;
  for (const auto& [name, c] : detail::preset_table()) out.push_back({name, c.description});
  return out;
}

inline ExperimentConfig preset_config(const std::string& name) {
  auto t = detail::preset_table();
  auto it = t.find(name);
  if (it == t.end()) throw ConfigError("unknown preset '" + name + "'");
  it->second.output = "dclab-" + name;
  it->second.validate();
  return it->second;
}

// ---------------------------------------------------------------------------
// Running.

struct SolveRecord {
  int iterations = 0;
  double kkt = 0.0;
  double objective = 0.0;
  double max_abs_u = 0.0;
  int active_a = 0, active_b = 0;
};

struct Lemma25Level {
  std::string label;
  Lemma25Report report;
  bool jump = false;
  double eta = 0.0;
};

struct LevelResult {
  int level = 0;
  double h = 0.0;       // nominal mesh parameter
  double h_max = 0.0;   // longest edge
  int nodes = 0, triangles = 0, boundary = 0;
  double min_angle_deg = 0.0;
  bool non_obtuse = false;
  std::optional<SolveRecord> constrained, unconstrained;
  std::vector<ExtractionResult> extractions;
  std::optional<ExtractionResult> focus;
  std::optional<HClassification> h_sets;
  std::optional<FlatnessReport> flatness;
  std::optional<StructureFit> structure;
  std::optional<BlowupFit> slope;
  std::optional<double> max_principle_ratio;  // worst max|y| / max|u| over the trials
  std::optional<double> uniqueness_gap;
  std::vector<Lemma25Level> lemma25;
  std::vector<std::string> notes;
};

struct RunReport {
  ExperimentConfig config;
  int focus_corner = 0;
  std::vector<LevelResult> levels;
  std::vector<std::string> failures;  // violated hard assertions
  std::vector<std::string> notes;
  std::string summary;
  int exit_code = 0;
};

struct RunOptions {
  bool write_files = true;
  std::ostream* progress = nullptr;
};

namespace detail {

inline std::string f6(double v) { return fmt_num(v, "%.6g"); }
inline std::string f10(double v) { return fmt_num(v, "%.10g"); }

inline std::string set_str(const CornerSet& s) {
  std::string out = "{";
  for (std::size_t k = 0; k < s.size(); ++k) out += (k ? "," : "") + std::to_string(s[k]);
  return out + "}";
}

inline SolveRecord record(const OptimalSolution& s) {
  SolveRecord r;
  r.iterations = s.iterations;
  r.kkt = s.kkt.max();
  r.objective = s.objective;
  r.max_abs_u = s.u.values.size() ? s.u.values.cwiseAbs().maxCoeff() : 0.0;
  r.active_a = static_cast<int>(s.active_a.size());
  r.active_b = static_cast<int>(s.active_b.size());
  return r;
}

/// Wedge-comparison checks for one case over its two finest levels.
inline void lemma25_assertions(const std::vector<LevelResult>& levels, std::size_t c, std::vector<std::string>& fail,
                               std::vector<std::string>& notes) {
  if (levels.size() < 2) {
    notes.push_back("lemma25: fewer than two levels, decay assertions skipped");
    return;
  }
  const std::string label = levels.back().lemma25[c].label;
  for (std::size_t k = levels.size() - 2; k < levels.size(); ++k) {
    const Lemma25Level& L = levels[k].lemma25[c];
    const auto& r = L.report;
    const std::string at = "lemma25 " + label + " level " + std::to_string(k) + ": ";
    for (int q = 1; q < 3; ++q)
      if (!(r.max_remainder[q] < r.max_wedge[q]))
        fail.push_back(at + "remainder not smaller than the wedge term for r < " + f6(r.radii[q]));
    if (!L.jump) {
      // Faster than r^eta: halving the ball shrinks the remainder by more than 2^-eta.
      const double bound = std::pow(0.5, L.eta);
      for (int q = 1; q < 3; ++q)
        if (!(r.max_remainder[q] < bound * r.max_remainder[q - 1]))
          fail.push_back(at + "remainder decays no faster than r^" + f6(L.eta) + " at r < " + f6(r.radii[q]));
    } else {
      double prev = kInf;
      for (int q = 0; q < 3; ++q) {
        const double ratio = r.max_remainder[q] / r.max_wedge[q];
        if (!(ratio < prev)) fail.push_back(at + "remainder / wedge ratio does not decrease at r < " + f6(r.radii[q]));
        prev = ratio;
      }
    }
  }
  const double j0 = levels[levels.size() - 2].lemma25[c].report.corner_jump;
  const double j1 = levels.back().lemma25[c].report.corner_jump;
  if (!(j1 <= j0)) fail.push_back("lemma25 " + label + ": remainder jump at the corner grows under refinement");
}

}  // namespace detail

inline RunReport run(const ExperimentConfig& cfg, const RunOptions& ro = {}) {
  cfg.validate();
  RunReport rep;
  rep.config = cfg;
  const PolygonalDomain dom = make_domain(cfg.domain);
  const int focus = cfg.corner ? *cfg.corner : default_focus_corner(dom);
  if (focus < 0 || focus >= dom.size()) throw ConfigError("field 'corner': out of range");
  if (dom.corner(focus).smooth) throw ConfigError("field 'corner': corner " + std::to_string(focus) + " is smooth");
  rep.focus_corner = focus;
  for (const auto& [j, mu] : cfg.grading)
    if (j < 0 || j >= dom.size()) throw ConfigError("field 'mesh.grading': corner " + std::to_string(j) + " out of range");

  ControlProblemSpec spec;
  spec.nu = cfg.nu;
  spec.a = cfg.a;
  spec.b = cfg.b;
  spec.target = make_target(cfg.target, dom);
  ControlProblemSpec free_spec = spec;
  free_spec.a = -kInf;
  free_spec.b = kInf;

  const bool con = cfg.has_stage("constrained"), unc = cfg.has_stage("unconstrained");
  const bool solves = con || unc;
  const std::string primary = !cfg.primary.empty() ? cfg.primary : (con ? "constrained" : "unconstrained");
  const bool zero_target = cfg.target.type == "constant" && cfg.target.value == 0.0 && zero_in_bounds(cfg.a, cfg.b);
  std::mt19937_64 rng(cfg.seed);

  if (ro.write_files) std::filesystem::create_directories(cfg.output);
  auto& fail = rep.failures;

  for (int k = 0; k < cfg.levels; ++k) {
    LevelResult L;
    L.level = k;
    L.h = cfg.h0 / std::pow(2.0, k);
    const std::string at = "level " + std::to_string(k) + ": ";
    if (ro.progress) *ro.progress << cfg.name << ": level " << k << " (h = " << detail::f6(L.h) << ")\n";

    std::optional<Discretization> disc;
    if (solves) {
      MeshOptions mo;
      mo.h = L.h;
      mo.grading = cfg.grading;
      mo.method = cfg.method;
      disc.emplace(triangulate(dom, mo));
      const TriMesh& m = disc->mesh();
      L.h_max = m.h;
      L.nodes = m.num_nodes();
      L.triangles = m.num_triangles();
      L.boundary = disc->num_boundary();
      L.min_angle_deg = m.min_angle * 180.0 / pi;
      L.non_obtuse = m.non_obtuse;
    }

    std::optional<OptimalSolution> sc, su;
    std::optional<ReducedProblem> problem;
    if (solves) problem.emplace(*disc, spec);
    if (con) {
      sc = solve_constrained(*problem, cfg.solver);
      L.constrained = detail::record(*sc);
      if (!(sc->kkt.max() < cfg.solver.kkt_tol)) fail.push_back(at + "constrained KKT residual above tolerance");
    }
    if (unc) {
      su = solve_unconstrained(*problem, cfg.solver);
      L.unconstrained = detail::record(*su);
      // The CG tolerance is relative; report against the data scale.
      const double scale = std::max(1.0, problem->linear_term().cwiseAbs().maxCoeff());
      if (!(su->kkt.max() < 1e-8 * scale)) fail.push_back(at + "unconstrained stationarity residual too large");
    }
    const OptimalSolution* sol = nullptr;
    if (solves) sol = primary == "constrained" ? &*sc : &*su;
    if (zero_target && solves) {
      for (const auto* s : {sc ? &*sc : nullptr, su ? &*su : nullptr})
        if (s && s->u.values.cwiseAbs().maxCoeff() >= 1e-10) fail.push_back(at + "zero target but nonzero control");
    }
    if (su && sc && ro.progress)
      *ro.progress << "  max|u| unconstrained " << detail::f6(L.unconstrained->max_abs_u) << ", constrained "
                   << detail::f6(L.constrained->max_abs_u) << '\n';

    if (cfg.has_stage("extract")) {
      for (int j = 0; j < dom.size(); ++j) {
        if (dom.corner(j).smooth) continue;
        try {
          L.extractions.push_back(extract_coefficients(disc->mesh(), sol->phi.values, j));
          if (j == focus) L.focus = L.extractions.back();
        } catch (const ExtractionError& e) {
          L.notes.push_back("extraction at corner " + std::to_string(j) + ": " + e.what());
        }
      }
      try {
        L.h_sets = classify_H_sets(dom, cfg.s_star, L.extractions);
      } catch (const ExtractionError& e) {
        L.notes.push_back(std::string("H classification: ") + e.what());
      }
    }

    if (cfg.has_stage("flatness") && L.focus) {
      const double significance = L.h_sets ? 3.0 * L.h_sets->threshold : 0.0;
      try {
        L.flatness = flatness_diagnostic(*disc, spec, *sc, focus, *L.focus, 1e-8, significance);
        if (!L.flatness->sign_consistent) fail.push_back(at + "flat bound contradicts the sign of c_{j,1}");
        // A flat zone smaller than the first mesh layer is invisible; report, do not fail.
        if (L.flatness->contradiction) L.notes.push_back("flatness: " + L.flatness->note);
      } catch (const GeometryError& e) {
        L.notes.push_back(std::string("flatness: ") + e.what());
      }
    }

    if (cfg.has_stage("structure") && (L.h_sets || primary == "unconstrained")) {
      ModeSets sets;
      if (primary == "unconstrained") {
        for (int m = 1; m <= 3; ++m) sets[m] = singular_sets(dom, cfg.s_star, m);
      } else {
        sets = L.h_sets->sets;
      }
      try {
        L.structure = structural_fit_control(*disc, primary == "unconstrained" ? free_spec : spec, *sol,
                                             L.extractions, sets, focus);
      } catch (const ExtractionError& e) {
        L.notes.push_back(std::string("structure: ") + e.what());
      }
    }

    if (cfg.has_stage("slope")) {
      try {
        L.slope = boundary_blowup_slope(*disc, su->u.values, focus, cfg.slope_lo, cfg.slope_hi);
      } catch (const ExtractionError& e) {
        L.notes.push_back(std::string("slope: ") + e.what());
      }
    }

    if (cfg.has_stage("max-principle")) {
      if (!disc->mesh().non_obtuse) {
        L.notes.push_back("max-principle: mesh has obtuse angles, check skipped");
      } else {
        double worst = 0.0;
        auto check = [&](const ScalarField& y, const BoundaryField& u, const std::string& what) {
          const MaxPrincipleReport r = check_max_principle(disc->mesh(), y, u);
          if (r.max_data > 0.0) worst = std::max(worst, r.max_state / r.max_data);
          if (!r.holds) fail.push_back(at + "maximum principle violated for " + what);
        };
        if (!spec.source && !spec.offset) check(sol->y, sol->u, "the optimal state");
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        for (int t = 0; t < cfg.max_principle_trials; ++t) {
          BoundaryField u{Vec(disc->num_boundary())};
          for (int b = 0; b < u.values.size(); ++b) u.values[b] = U(rng);
          check(solve_state(*disc, u), u, "random control " + std::to_string(t));
        }
        L.max_principle_ratio = worst;
      }
    }

    if (cfg.has_stage("uniqueness")) {
      const double lo = std::isfinite(spec.a) ? spec.a : -1.0, hi = std::isfinite(spec.b) ? spec.b : 1.0;
      std::uniform_real_distribution<double> U(lo, hi);
      Vec start(disc->num_boundary());
      for (int b = 0; b < start.size(); ++b) start[b] = U(rng);
      const OptimalSolution other = primary == "constrained" ? solve_constrained(*problem, cfg.solver, start)
                                                             : solve_unconstrained(*problem, cfg.solver, start);
      L.uniqueness_gap = (other.u.values - sol->u.values).cwiseAbs().maxCoeff();
      if (!(*L.uniqueness_gap <= 1e-8)) fail.push_back(at + "solutions from two starts differ by " + detail::f6(*L.uniqueness_gap));
    }

    if (cfg.has_stage("lemma25")) {
      for (const Lemma25Case& lc : cfg.lemma25) {
        const PolygonalDomain ld = make_domain(lc.domain);
        MeshOptions mo;
        mo.h = L.h;
        mo.grading = lc.grading;
        Discretization ldisc(triangulate(ld, mo));
        SingularBoundaryData data;
        (lc.jump ? data.jump : data.non_jump).push_back({lc.corner, lc.eta, lc.amplitude});
        Lemma25Level ll{lc.label, verify_lemma25(ldisc, data, lc.corner), lc.jump, lc.eta};
        if (!solves) {
          const double angle = ldisc.mesh().min_angle * 180.0 / pi;
          L.min_angle_deg = L.lemma25.empty() ? angle : std::min(L.min_angle_deg, angle);
          L.h_max = std::max(L.h_max, ldisc.mesh().h);
          L.nodes += ldisc.num_nodes();
          L.triangles += ldisc.mesh().num_triangles();
          L.boundary += ldisc.num_boundary();
        }
        if (ro.write_files) {
          write_nodal_csv(cfg.output / ("level" + std::to_string(k) + "_" + lc.label + ".csv"), ldisc.mesh(),
                          {{"state", &ll.report.state}, {"wedge", &ll.report.wedge}, {"remainder", &ll.report.remainder}});
        }
        L.lemma25.push_back(std::move(ll));
      }
    }

    if (ro.write_files && solves) {
      const std::string stem = "level" + std::to_string(k);
      std::vector<std::pair<std::string, const Vec*>> bf{{"u", &sol->u.values}, {"flux", &sol->flux.values}};
      Vec unc_u;
      if (sc && su) {
        unc_u = (primary == "constrained" ? su : sc)->u.values;
        bf.push_back({primary == "constrained" ? "u_unconstrained" : "u_constrained", &unc_u});
      }
      if (L.structure) bf.push_back({"remainder", &L.structure->remainder});
      write_boundary_csv(cfg.output / (stem + "_boundary.csv"), *disc, bf, focus);
      if (!L.extractions.empty()) {
        CsvWriter w(cfg.output / (stem + "_extraction.csv"),
                    {"corner", "lambda", "mode", "coefficient", "residual", "nodes", "condition"});
        for (const auto& e : L.extractions)
          for (std::size_t q = 0; q < e.modes.size(); ++q)
            w.row({double(e.corner), e.lambda, double(e.modes[q]), e.coefficients[q], e.residual, double(e.nodes),
                   e.condition});
      }
    }
    rep.levels.push_back(std::move(L));
  }

  if (cfg.has_stage("lemma25"))
    for (std::size_t c = 0; c < cfg.lemma25.size(); ++c) detail::lemma25_assertions(rep.levels, c, fail, rep.notes);

  // Summary.
  using detail::f10;
  using detail::f6;
  std::ostringstream s;
  s << "experiment: " << cfg.name << '\n';
  if (!cfg.description.empty()) s << "description: " << cfg.description << '\n';
  s << "domain: " << dom.name() << ", " << dom.size() << " vertices, focus corner " << focus << " (omega "
    << f6(dom.corner(focus).angle) << ", lambda " << f6(dom.corner(focus).lambda) << ")\n";
  if (solves)
    s << "problem: nu " << f6(cfg.nu) << ", bounds [" << f6(cfg.a) << ", " << f6(cfg.b) << "], target "
      << spec.target.description << '\n';
  s << "ladder: h0 " << f6(cfg.h0) << ", " << cfg.levels << " levels";
  for (const auto& [j, mu] : cfg.grading) s << ", grading mu " << f6(mu) << " at corner " << j;
  s << "\nstages:";
  for (const auto& st : cfg.stages) s << ' ' << st;
  s << "\n\n";

  s << "level  h          nodes    bdry   min_angle";
  if (con) s << "  con_it  con_kkt      objective";
  if (unc) s << "  unc_kkt     max|u_unc|";
  s << '\n';
  for (const auto& L : rep.levels) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-6d %-10.4g %-8d %-6d %-10.4g", L.level, L.h, L.nodes, L.boundary,
                  L.min_angle_deg);
    s << buf;
    if (L.constrained) {
      std::snprintf(buf, sizeof buf, " %-7d %-12.3e %-.12g", L.constrained->iterations, L.constrained->kkt,
                    L.constrained->objective);
      s << buf;
    }
    if (L.unconstrained) {
      std::snprintf(buf, sizeof buf, "  %-11.3e %-.6g", L.unconstrained->kkt, L.unconstrained->max_abs_u);
      s << buf;
    }
    s << '\n';
  }

  if (cfg.has_stage("extract")) {
    s << "\ncoefficients at corner " << focus << ":\n";
    for (const auto& L : rep.levels) {
      s << "  level " << L.level << ": ";
      if (!L.focus) {
        s << "n/a\n";
        continue;
      }
      for (std::size_t q = 0; q < L.focus->modes.size(); ++q)
        s << "c" << focus << "," << L.focus->modes[q] << " = " << f10(L.focus->coefficients[q]) << "  ";
      s << "residual " << f6(L.focus->residual);
      if (L.h_sets) {
        s << "  H1 " << detail::set_str(L.h_sets->sets[1]) << " H2 " << detail::set_str(L.h_sets->sets[2]) << " H3 "
          << detail::set_str(L.h_sets->sets[3]);
        if (!L.h_sets->undetermined.empty()) s << " undetermined " << detail::set_str(L.h_sets->undetermined);
      }
      s << '\n';
    }
    std::vector<double> hs, c1, c2;
    for (const auto& L : rep.levels)
      if (L.focus) hs.push_back(L.h), c1.push_back(std::abs(L.focus->coefficient(1))), c2.push_back(L.focus->coefficient(2));
    for (std::size_t i = 1; i < c1.size(); ++i)
      s << "  |c1| ratio level " << i - 1 << "/" << i << ": " << f6(c1[i] > 0 ? c1[i - 1] / c1[i] : kInf)
        << ", c2 relative change " << f6(c2[i - 1] != 0 ? std::abs(c2[i] - c2[i - 1]) / std::abs(c2[i - 1]) : 0.0)
        << '\n';
    if (c1.size() >= 3) {
      const RateEstimate r = rate_estimate(hs, c1);
      s << "  empirical order of |c1| in h: " << f6(r.order) << (r.warning ? " (" + r.message + ")" : "") << '\n';
    }
  }

  if (cfg.has_stage("flatness")) {
    s << "\nflatness at corner " << focus << ":\n";
    for (const auto& L : rep.levels) {
      s << "  level " << L.level << ": ";
      if (!L.flatness) {
        s << "n/a\n";
        continue;
      }
      const auto& f = *L.flatness;
      s << "verdict " << to_string(f.verdict) << ", radius " << f10(f.radius) << " (nodes " << f10(f.node_radius)
        << "), outgoing " << f.outgoing.flat_nodes << " nodes to r " << f6(f.outgoing.radius) << ", incoming "
        << f.incoming.flat_nodes << " nodes to r " << f6(f.incoming.radius) << ", expected bound "
        << (f.expected_bound < 0 ? "a" : f.expected_bound > 0 ? "b" : "?")
        << (f.sign_consistent ? "" : " (sign mismatch)") << '\n';
    }
    if (rep.levels.size() >= 2 && rep.levels.back().flatness && rep.levels[rep.levels.size() - 2].flatness) {
      const double r0 = rep.levels[rep.levels.size() - 2].flatness->radius, r1 = rep.levels.back().flatness->radius;
      if (r0 > 0) s << "  flat radius change over the last two levels: " << f6(std::abs(r1 - r0) / r0) << '\n';
    }
  }

  if (cfg.has_stage("structure")) {
    s << "\nsingular control terms subtracted at corner " << focus << ":\n";
    for (const auto& L : rep.levels) {
      s << "  level " << L.level << ": ";
      if (!L.structure) {
        s << "n/a\n";
        continue;
      }
      const auto& st = *L.structure;
      for (const auto& t : st.terms) s << "a" << t.corner << "," << t.mode << " = " << f6(t.coefficient) << "  ";
      if (!st.radii.empty())
        s << "max|u| " << f6(st.max_control.back()) << " -> remainder " << f6(st.max_remainder.back()) << " for r < "
          << f6(st.radii.back()) << ", ";
      s << "Hoelder-1/2 quotient " << f6(st.holder_control) << " -> " << f6(st.holder_remainder) << '\n';
    }
  }

  if (cfg.has_stage("slope")) {
    s << "\nlog|u| vs log r on [" << f6(cfg.slope_lo) << ", " << f6(cfg.slope_hi) << "] (unconstrained):\n";
    for (const auto& L : rep.levels) {
      s << "  level " << L.level << ": ";
      if (!L.slope) s << "n/a";
      else s << "slope " << f6(L.slope->slope) << " over " << L.slope->samples << " nodes";
      if (L.constrained) s << ", constrained max|u| " << f6(L.constrained->max_abs_u);
      s << '\n';
    }
    s << "  expected slope lambda - 1 = " << f6(dom.corner(focus).lambda - 1.0) << '\n';
  }

  if (cfg.has_stage("max-principle")) {
    s << "\nmaximum principle (max|y| / max|u|):\n";
    for (const auto& L : rep.levels)
      s << "  level " << L.level << ": " << (L.max_principle_ratio ? f10(*L.max_principle_ratio) : "skipped") << '\n';
  }

  if (cfg.has_stage("uniqueness")) {
    s << "\nsecond start (seed " << cfg.seed << "), max |u1 - u2|:\n";
    for (const auto& L : rep.levels)
      s << "  level " << L.level << ": " << (L.uniqueness_gap ? fmt_num(*L.uniqueness_gap, "%.3e") : "n/a") << '\n';
  }

  if (cfg.has_stage("lemma25")) {
    s << "\nsingular boundary data (max over r < rho of |remainder| and |wedge|):\n";
    for (const auto& L : rep.levels)
      for (const auto& ll : L.lemma25) {
        s << "  level " << L.level << " " << ll.label << ":";
        for (std::size_t q = 0; q < ll.report.radii.size(); ++q)
          s << "  rho " << f6(ll.report.radii[q]) << ": " << fmt_num(ll.report.max_remainder[q], "%.4e") << " / "
            << fmt_num(ll.report.max_wedge[q], "%.4e");
        s << "  corner jump " << fmt_num(ll.report.corner_jump, "%.3e") << '\n';
      }
  }

  bool any_note = !rep.notes.empty();
  for (const auto& L : rep.levels) any_note |= !L.notes.empty();
  if (any_note) {
    s << "\nnotes:\n";
    for (const auto& L : rep.levels)
      for (const auto& n : L.notes) s << "  level " << L.level << ": " << n << '\n';
    for (const auto& n : rep.notes) s << "  " << n << '\n';
  }

  s << "\nassertions: " << (fail.empty() ? "all passed" : std::to_string(fail.size()) + " failed") << '\n';
  for (const auto& f : fail) s << "  FAILED " << f << '\n';
  rep.summary = s.str();
  rep.exit_code = fail.empty() ? 0 : 1;

  if (ro.write_files) {
    std::ofstream(cfg.output / "summary.txt") << rep.summary;
    {
      CsvWriter w(cfg.output / "levels.csv", {"level", "h", "h_max", "nodes", "triangles", "boundary", "min_angle_deg",
                                               "con_iterations", "con_kkt", "con_objective", "unc_kkt", "unc_max_abs_u",
                                               "c1", "c2", "flat_verdict", "flat_radius", "slope"});
      const double nan = std::numeric_limits<double>::quiet_NaN();
      for (const auto& L : rep.levels) {
        auto num = [](double v) { return fmt_num(v); };
        w.row(std::vector<std::string>{
            std::to_string(L.level), num(L.h), num(L.h_max), std::to_string(L.nodes), std::to_string(L.triangles),
            std::to_string(L.boundary), num(L.min_angle_deg),
            L.constrained ? std::to_string(L.constrained->iterations) : "",
            num(L.constrained ? L.constrained->kkt : nan), num(L.constrained ? L.constrained->objective : nan),
            num(L.unconstrained ? L.unconstrained->kkt : nan), num(L.unconstrained ? L.unconstrained->max_abs_u : nan),
            num(L.focus ? L.focus->coefficient(1) : nan), num(L.focus ? L.focus->coefficient(2) : nan),
            L.flatness ? to_string(L.flatness->verdict) : "", num(L.flatness ? L.flatness->radius : nan),
            num(L.slope ? L.slope->slope : nan)});
      }
    }
    if (solves) {
      std::ofstream gp(cfg.output / "control_profile.gp");
      gp << "# gnuplot " << cfg.output.filename().string() << "/control_profile.gp, run from that directory\n"
         << "set datafile separator ','\nset terminal pngcairo size 1000,600\n"
         << "set output 'control_profile.png'\nset xlabel 'arc length from vertex 0'\nset ylabel 'u'\n"
         << "plot \\\n";
      for (const auto& L : rep.levels)
        gp << "  'level" << L.level << "_boundary.csv' skip 1 using 7:9 with lines title 'level " << L.level << "'"
           << (L.level + 1 < static_cast<int>(rep.levels.size()) ? ", \\\n" : "\n");
      gp << "set output 'control_near_corner.png'\nset logscale xy\nset xlabel 'distance to corner " << focus
         << "'\nset ylabel '|u|'\nplot \\\n";
      for (const auto& L : rep.levels)
        gp << "  'level" << L.level << "_boundary.csv' skip 1 using 8:(abs($9)) with points title 'level " << L.level
           << "'" << (L.level + 1 < static_cast<int>(rep.levels.size()) ? ", \\\n" : "\n");
    }
  }
  return rep;
}

/// Exit status for an exception escaping run(): 2 for configuration and
/// input errors, 3 for solver failures.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const GeometryError*>(&e) ||
      dynamic_cast<const MeshError*>(&e))
    return 2;
  return 3;
}

}  // namespace dclab
