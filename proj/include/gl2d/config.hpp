#pragma once

// Run configuration: a flat INI-style text format with sections mirroring the
// library modules. Parsing is strict — unknown sections, unknown keys, and
// duplicate keys are hard errors, because a silently ignored typo in a
// physics configuration is worse than a failed run.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gauge.hpp"
#include "grid.hpp"

namespace gl2d {

struct ConfigError : std::runtime_error {
  std::vector<std::string> issues;
  explicit ConfigError(std::vector<std::string> is)
      : std::runtime_error(join(is)), issues(std::move(is)) {}
  static std::string join(const std::vector<std::string>& is) {
    std::string s = "invalid configuration:";
    for (const auto& i : is) s += "\n  - " + i;
    return s;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

}  // namespace detail

// Ordered section -> key -> raw value map, with location-tagged errors.
struct IniFile {
  std::map<std::string, std::map<std::string, std::string>> sections;

  static IniFile parse(std::istream& in, const std::string& name = "<config>") {
    IniFile f;
    std::vector<std::string> issues;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string t = detail::trim(line);
      size_t cm = t.find_first_of("#;");
      if (cm != std::string::npos) t = detail::trim(t.substr(0, cm));
      if (t.empty()) continue;
      if (t.front() == '[') {
        if (t.back() != ']') {
          issues.push_back(name + ":" + std::to_string(lineno) + ": malformed section header");
          continue;
        }
        section = detail::trim(t.substr(1, t.size() - 2));
        if (section.empty())
          issues.push_back(name + ":" + std::to_string(lineno) + ": empty section name");
        continue;
      }
      size_t eq = t.find('=');
      if (eq == std::string::npos) {
        issues.push_back(name + ":" + std::to_string(lineno) + ": expected key = value");
        continue;
      }
      std::string key = detail::trim(t.substr(0, eq));
      std::string val = detail::trim(t.substr(eq + 1));
      if (key.empty()) {
        issues.push_back(name + ":" + std::to_string(lineno) + ": empty key");
        continue;
      }
      if (section.empty()) {
        issues.push_back(name + ":" + std::to_string(lineno) + ": key '" + key +
                         "' outside any section");
        continue;
      }
      auto& sec = f.sections[section];
      if (sec.count(key))
        issues.push_back(name + ":" + std::to_string(lineno) + ": duplicate key '" +
                         section + "." + key + "'");
      else
        sec[key] = val;
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return f;
  }

  static IniFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
    return parse(in, path);
  }

  static IniFile parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }
};

enum class Pipeline { Eigen, Minimize, Branch, ReducedBranch, Nodal, PhaseDiagram, Check, Convert };

inline const char* pipeline_name(Pipeline p) {
  switch (p) {
    case Pipeline::Eigen: return "eigen";
    case Pipeline::Minimize: return "minimize";
    case Pipeline::Branch: return "branch";
    case Pipeline::ReducedBranch: return "reduced-branch";
    case Pipeline::Nodal: return "nodal";
    case Pipeline::PhaseDiagram: return "phase-diagram";
    case Pipeline::Check: return "check";
    case Pipeline::Convert: return "convert";
  }
  return "?";
}

struct FieldConfig {
  FieldProfile profile = FieldProfile::None;
  double amplitude = 0;             // uniform / ring value
  std::vector<double> fluxes;       // per-hole targets for uniform_in_holes
  double r0 = 0, r1 = 0;            // ring radii
};

struct PhysicalConfig {
  double a = 0, b = 0, m = 0, e = 0, c_light = 0, hbar = 0;
  bool present = false;
};

struct RunConfig {
  Pipeline pipeline = Pipeline::Check;
  uint64_t seed = 0;
  int threads = 1;
  std::string output_dir = "out";

  DomainSpec domain;
  bool domain_present = false;
  FieldConfig field;
  bool field_present = false;

  double lambda = 1.0, kappa = 1.0;
  bool lambda_present = false, kappa_present = false;

  std::vector<double> alphas;           // branch / reduced-branch amplitudes
  double branch_residual_tol = 1e-9;

  double nodal_alpha = 0.1;
  double nodal_epsilon = 0.05;

  std::vector<double> phase_kappas;
  double phase_tol = 1e-2;

  double eig_tol = 1e-10;

  PhysicalConfig physical;

  IniFile raw;  // echoed into the manifest
};

namespace detail {

struct KeyReader {
  const std::map<std::string, std::string>* sec;
  std::string secname;
  std::vector<std::string>* issues;
  std::vector<std::string> known;

  bool has(const std::string& k) {
    known.push_back(k);
    return sec && sec->count(k);
  }
  std::string str(const std::string& k, const std::string& dflt = "") {
    return has(k) ? sec->at(k) : dflt;
  }
  double num(const std::string& k, double dflt) {
    if (!has(k)) return dflt;
    try {
      size_t pos = 0;
      double v = std::stod(sec->at(k), &pos);
      if (pos != sec->at(k).size()) throw std::invalid_argument("trailing junk");
      return v;
    } catch (const std::exception&) {
      issues->push_back(secname + "." + k + ": not a number: '" + sec->at(k) + "'");
      return dflt;
    }
  }
  long integer(const std::string& k, long dflt) {
    double v = num(k, double(dflt));
    if (v != std::floor(v))
      issues->push_back(secname + "." + k + ": expected an integer");
    return long(v);
  }
  std::vector<double> list(const std::string& k) {
    std::vector<double> out;
    if (!has(k)) return out;
    std::stringstream ss(sec->at(k));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      try {
        out.push_back(std::stod(item));
      } catch (const std::exception&) {
        issues->push_back(secname + "." + k + ": not a number: '" + item + "'");
      }
    }
    return out;
  }
  void finish() {
    if (!sec) return;
    for (const auto& [k, v] : *sec)
      if (std::find(known.begin(), known.end(), k) == known.end())
        issues->push_back(secname + "." + k + ": unknown key");
  }
};

}  // namespace detail

inline bool half_integer_flux(double f) {
  return std::abs(f - std::round(f - 0.5) - 0.5) <= 1e-12;
}

// Bind the parsed file to a typed configuration, collecting every problem
// (unknown sections and keys, missing requirements, inconsistent pipelines)
// into a single rejection.
inline RunConfig load_config(const IniFile& ini) {
  std::vector<std::string> issues;
  RunConfig c;
  c.raw = ini;

  const std::vector<std::string> known_sections = {
      "run", "domain", "field", "parameters", "branch", "nodal", "phase", "physical", "solver"};
  for (const auto& [name, _] : ini.sections)
    if (std::find(known_sections.begin(), known_sections.end(), name) == known_sections.end())
      issues.push_back("[" + name + "]: unknown section");

  auto reader = [&](const std::string& name) {
    detail::KeyReader r;
    auto it = ini.sections.find(name);
    r.sec = it == ini.sections.end() ? nullptr : &it->second;
    r.secname = name;
    r.issues = &issues;
    return r;
  };

  {
    auto r = reader("run");
    std::string p = r.str("pipeline");
    if (p.empty()) {
      issues.push_back("run.pipeline: required");
    } else {
      bool found = false;
      for (Pipeline pl : {Pipeline::Eigen, Pipeline::Minimize, Pipeline::Branch,
                          Pipeline::ReducedBranch, Pipeline::Nodal, Pipeline::PhaseDiagram,
                          Pipeline::Check, Pipeline::Convert})
        if (p == pipeline_name(pl)) {
          c.pipeline = pl;
          found = true;
        }
      if (!found) issues.push_back("run.pipeline: unknown pipeline '" + p + "'");
    }
    long seed = r.integer("seed", 0);
    if (seed < 0)
      issues.push_back("run.seed: must be non-negative");
    else
      c.seed = uint64_t(seed);
    c.threads = int(r.integer("threads", 1));
    if (c.threads < 1) issues.push_back("run.threads: must be >= 1");
    c.output_dir = r.str("output_dir", c.output_dir);
    r.finish();
  }

  c.domain_present = ini.sections.count("domain") > 0;
  if (c.domain_present) {
    auto r = reader("domain");
    std::string shape = r.str("shape", "rectangle");
    if (shape == "rectangle")
      c.domain.shape = Shape::Rectangle;
    else if (shape == "disk")
      c.domain.shape = Shape::Disk;
    else if (shape == "annulus")
      c.domain.shape = Shape::Annulus;
    else if (shape == "rectangle_with_holes")
      c.domain.shape = Shape::RectangleWithRectHoles;
    else
      issues.push_back("domain.shape: unknown shape '" + shape + "'");
    c.domain.n = int(r.integer("n", 32));
    c.domain.lx = r.num("lx", 1.0);
    c.domain.ly = r.num("ly", 1.0);
    c.domain.outer_radius = r.num("outer_radius", 0.5);
    if (r.has("hole_r") || r.has("hole_wx")) {
      HoleSpec h;
      h.disk = r.str("hole_kind", "disk") == "disk";
      h.cx = r.num("hole_cx", 0.0);
      h.cy = r.num("hole_cy", 0.0);
      h.r = r.num("hole_r", 0.0);
      h.wx = r.num("hole_wx", 0.0);
      h.wy = r.num("hole_wy", 0.0);
      c.domain.holes = {h};
    } else {
      r.num("hole_cx", 0.0);  // mark as known even without a hole
      r.num("hole_cy", 0.0);
      r.str("hole_kind", "disk");
      r.num("hole_wy", 0.0);
    }
    r.finish();
  }

  c.field_present = ini.sections.count("field") > 0;
  if (c.field_present) {
    auto r = reader("field");
    std::string p = r.str("profile", "none");
    if (p == "none")
      c.field.profile = FieldProfile::None;
    else if (p == "uniform")
      c.field.profile = FieldProfile::Uniform;
    else if (p == "uniform_in_holes")
      c.field.profile = FieldProfile::UniformInHoles;
    else if (p == "ring")
      c.field.profile = FieldProfile::Ring;
    else
      issues.push_back("field.profile: unknown profile '" + p + "'");
    c.field.amplitude = r.num("amplitude", 0.0);
    c.field.fluxes = r.list("flux");
    c.field.r0 = r.num("r0", 0.0);
    c.field.r1 = r.num("r1", 0.0);
    if (c.field.profile == FieldProfile::UniformInHoles && c.field.fluxes.empty())
      issues.push_back("field.flux: required for profile uniform_in_holes");
    if (c.field.profile == FieldProfile::Ring && !(c.field.r1 > c.field.r0))
      issues.push_back("field.r0/field.r1: ring requires r1 > r0");
    r.finish();
  }

  {
    auto r = reader("parameters");
    c.lambda_present = r.has("lambda");
    c.kappa_present = r.has("kappa");
    c.lambda = r.num("lambda", c.lambda);
    c.kappa = r.num("kappa", c.kappa);
    if (c.lambda_present && !(c.lambda > 0)) issues.push_back("parameters.lambda: must be > 0");
    if (c.kappa_present && !(c.kappa > 0)) issues.push_back("parameters.kappa: must be > 0");
    r.finish();
  }
  {
    auto r = reader("branch");
    c.alphas = r.list("alphas");
    c.branch_residual_tol = r.num("residual_tol", c.branch_residual_tol);
    if (!(c.branch_residual_tol > 0)) issues.push_back("branch.residual_tol: must be > 0");
    r.finish();
  }
  {
    auto r = reader("nodal");
    c.nodal_alpha = r.num("alpha", c.nodal_alpha);
    c.nodal_epsilon = r.num("epsilon", c.nodal_epsilon);
    if (!(c.nodal_epsilon > 0 && c.nodal_epsilon < 0.5))
      issues.push_back("nodal.epsilon: must lie in (0, 0.5)");
    r.finish();
  }
  {
    auto r = reader("phase");
    c.phase_kappas = r.list("kappas");
    c.phase_tol = r.num("tol", c.phase_tol);
    if (!(c.phase_tol > 0)) issues.push_back("phase.tol: must be > 0");
    r.finish();
  }
  {
    auto r = reader("solver");
    c.eig_tol = r.num("eig_tol", c.eig_tol);
    if (!(c.eig_tol > 0)) issues.push_back("solver.eig_tol: must be > 0");
    r.finish();
  }
  c.physical.present = ini.sections.count("physical") > 0;
  if (c.physical.present) {
    auto r = reader("physical");
    c.physical.a = r.num("a", 0.0);
    c.physical.b = r.num("b", 0.0);
    c.physical.m = r.num("m", 0.0);
    c.physical.e = r.num("e", 0.0);
    c.physical.c_light = r.num("c_light", 0.0);
    c.physical.hbar = r.num("hbar", 0.0);
    r.finish();
  }

  // Pipeline-specific requirements.
  auto need_domain = [&] {
    if (!c.domain_present) issues.push_back("domain: section required by this pipeline");
    if (!c.field_present) issues.push_back("field: section required by this pipeline");
  };
  switch (c.pipeline) {
    case Pipeline::Eigen:
    case Pipeline::Check:
      need_domain();
      break;
    case Pipeline::Minimize:
      need_domain();
      if (!c.lambda_present) issues.push_back("parameters.lambda: required by pipeline minimize");
      if (!c.kappa_present) issues.push_back("parameters.kappa: required by pipeline minimize");
      break;
    case Pipeline::Branch:
    case Pipeline::ReducedBranch:
      need_domain();
      if (!c.kappa_present)
        issues.push_back("parameters.kappa: required by branch pipelines");
      if (c.alphas.empty()) issues.push_back("branch.alphas: required by branch pipelines");
      break;
    case Pipeline::Nodal:
      need_domain();
      if (!c.kappa_present) issues.push_back("parameters.kappa: required by pipeline nodal");
      break;
    case Pipeline::PhaseDiagram:
      need_domain();
      if (c.phase_kappas.empty())
        issues.push_back("phase.kappas: required by pipeline phase-diagram");
      break;
    case Pipeline::Convert:
      if (!c.physical.present)
        issues.push_back("physical: section required by pipeline convert");
      break;
  }

  // The reduced branch and the nodal detector only exist under the
  // antilinear symmetry: no field on the sample, half-integer hole fluxes.
  if (c.pipeline == Pipeline::ReducedBranch || c.pipeline == Pipeline::Nodal) {
    if (c.field_present && c.field.profile != FieldProfile::UniformInHoles)
      issues.push_back(
          "field.profile: the half-flux symmetry requires the field to be confined "
          "to the holes (profile uniform_in_holes)");
    for (double f : c.field.fluxes)
      if (!half_integer_flux(f))
        issues.push_back("field.flux: value " + std::to_string(f) +
                         " violates the half-flux precondition (must be in Z + 1/2)");
    if (c.domain_present && c.domain.holes.empty())
      issues.push_back("domain: half-flux pipelines require at least one hole");
  }

  if (!issues.empty()) throw ConfigError(std::move(issues));
  return c;
}

inline RunConfig load_config_file(const std::string& path) {
  return load_config(IniFile::parse_file(path));
}

// Assemble the external field described by the configuration.
inline ExternalField make_field(const Domain& d, const FieldConfig& f) {
  switch (f.profile) {
    case FieldProfile::None: return field_none(d);
    case FieldProfile::Uniform: return field_uniform(d, f.amplitude);
    case FieldProfile::UniformInHoles: return field_uniform_in_holes(d, f.fluxes);
    case FieldProfile::Ring: return field_ring(d, f.amplitude, f.r0, f.r1);
  }
  throw std::logic_error("unreachable field profile");
}

}  // namespace gl2d
