#pragma once

// Pipeline driver: executes a validated run configuration, writes CSV data
// files plus a JSON manifest, and reports success / flagged / failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bifurcation.hpp"
#include "config.hpp"
#include "functional.hpp"
#include "gauge.hpp"
#include "grid.hpp"
#include "phasediagram.hpp"
#include "spectra.hpp"
#include "symmetry.hpp"

namespace gl2d {

inline constexpr const char* kArtifactVersion = "1.0.0";

struct RunResult {
  int exit_code = 0;  // 0 ok, 2 flagged (a stage did not converge)
  nlohmann::json manifest;
  std::string manifest_path;
};

namespace detail {

// Fixed shortest-roundtrip formatting so identical runs write identical bytes.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class RunWriter {
 public:
  RunWriter(const RunConfig& c, const std::string& output_root) {
    namespace fs = std::filesystem;
    dir_ = output_root.empty() ? fs::path(c.output_dir)
                               : fs::path(output_root) / c.output_dir;
    fs::create_directories(dir_);
    manifest_["artifact_version"] = kArtifactVersion;
    manifest_["pipeline"] = pipeline_name(c.pipeline);
    manifest_["seed"] = c.seed;
    manifest_["threads"] = c.threads;
    nlohmann::json echo;
    for (const auto& [sec, keys] : c.raw.sections)
      for (const auto& [k, v] : keys) echo[sec][k] = v;
    manifest_["config"] = echo;
    manifest_["scalars"] = nlohmann::json::object();
    manifest_["files"] = nlohmann::json::array();
    manifest_["stages"] = nlohmann::json::array();
    manifest_["notes"] = nlohmann::json::array();
  }

  template <class F>
  void stage(const std::string& name, F&& body) {
    auto t0 = std::chrono::steady_clock::now();
    body();
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest_["stages"].push_back({{"name", name}, {"seconds", s}});
  }

  void scalar(const std::string& k, const nlohmann::json& v) { manifest_["scalars"][k] = v; }
  void note(const std::string& n) { manifest_["notes"].push_back(n); }
  void flag(const std::string& why) {
    flagged_ = true;
    note(why);
  }
  bool flagged() const { return flagged_; }

  // rows of pre-formatted cells
  void csv(const std::string& name, const std::vector<std::string>& header,
           const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(dir_ / name, std::ios::binary);
    for (size_t k = 0; k < header.size(); ++k)
      out << (k ? "," : "") << header[k];
    out << "\n";
    for (const auto& row : rows) {
      for (size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << row[k];
      out << "\n";
    }
    manifest_["files"].push_back(name);
  }

  RunResult finish() {
    RunResult r;
    manifest_["status"] = flagged_ ? "flagged" : "ok";
    r.exit_code = flagged_ ? 2 : 0;
    std::string path = (dir_ / "manifest.json").string();
    manifest_["files"].push_back("manifest.json");
    std::ofstream out(path, std::ios::binary);
    out << manifest_.dump(2) << "\n";
    r.manifest = manifest_;
    r.manifest_path = path;
    return r;
  }

 private:
  std::filesystem::path dir_;
  nlohmann::json manifest_;
  bool flagged_ = false;
};

inline std::vector<std::vector<std::string>> field_rows(const Domain& d,
                                                        const ComplexField& u) {
  std::vector<std::vector<std::string>> rows;
  for (int j = 0; j < d.ny; ++j)
    for (int i = 0; i < d.nx; ++i)
      if (d.in_omega(i, j))
        rows.push_back({std::to_string(i), std::to_string(j), fmt(d.cell_x(i)),
                        fmt(d.cell_y(j)), fmt(std::abs(u.c(i, j))),
                        fmt(u.c(i, j).real()), fmt(u.c(i, j).imag())});
  return rows;
}

}  // namespace detail

inline RunResult run(const RunConfig& c, const std::string& output_root = "") {
  using nlohmann::json;
  detail::RunWriter w(c, output_root);
  w.note(PhasePoint::method_note);

  Domain d;
  GaugeData g;
  if (c.domain_present) {
    w.stage("domain", [&] { d = build_domain(c.domain); });
    w.stage("gauge", [&] { g = external_potential(d, make_field(d, c.field)); });
    w.scalar("h", d.h);
    w.scalar("area_omega", area(d, Region::Omega));
    w.scalar("area_tilde", area(d, Region::Tilde));
    w.scalar("betti1", omega_betti1(d));
    w.scalar("gauge_div_residual", g.div_residual);
    w.scalar("gauge_normal_residual", g.normal_residual);
    w.scalar("gauge_curl_residual", g.curl_residual);
    w.scalar("hole_fluxes", g.hole_fluxes);
  }

  auto eigenpair = [&](Spectrum& sp) {
    MagneticOperator op = assemble(g, d);
    sp = ground_state(op, 2, c.eig_tol);
    w.scalar("lambda1", sp.lambda1());
    w.scalar("gap", sp.gap());
    w.scalar("near_degenerate", sp.near_degenerate);
    if (!sp.converged) w.flag("eigen stage did not converge");
  };

  switch (c.pipeline) {
    case Pipeline::Check:
      break;  // the common diagnostics above are the whole job

    case Pipeline::Eigen: {
      Spectrum sp;
      w.stage("eigen", [&] { eigenpair(sp); });
      w.csv("mode.csv", {"i", "j", "x", "y", "abs", "re", "im"},
            detail::field_rows(d, sp.u1()));
      break;
    }

    case Pipeline::Minimize: {
      MinimizeResult r;
      w.stage("minimize", [&] {
        r = multistart_minimize(d, GLParameters(c.lambda, c.kappa), g, nullptr, {}, c.seed);
      });
      w.scalar("energy", r.report.energy);
      w.scalar("residual_u", r.report.res_u);
      w.scalar("residual_a", r.report.res_a);
      w.scalar("max_modulus", r.report.max_modulus);
      w.scalar("iterations", r.iterations);
      if (!r.converged) w.flag("minimize stage did not converge");
      w.csv("state.csv", {"i", "j", "x", "y", "abs", "re", "im"},
            detail::field_rows(d, r.state.u));
      break;
    }

    case Pipeline::Branch:
    case Pipeline::ReducedBranch: {
      Spectrum sp;
      w.stage("eigen", [&] { eigenpair(sp); });
      GLParameters p(c.lambda, c.kappa);
      BifurcationCoefficients co;
      w.stage("coefficients", [&] { co = coefficients(d, sp, g, p); });
      w.scalar("I0", co.I0);
      w.scalar("K0", co.K0);
      w.scalar("c_kappa", co.c_kappa);
      w.scalar("kappa_c", co.kappa_c);
      Branch br;
      BranchOptions opts;
      opts.residual_tol = c.branch_residual_tol;
      if (c.pipeline == Pipeline::Branch) {
        w.stage("branch", [&] { br = trace_branch(d, sp, g, p, c.alphas, opts); });
      } else {
        HalfFluxPhase ph;
        w.stage("symmetry", [&] { ph = half_flux_phase(g, d); });
        w.scalar("loop_defect", ph.loop_defect);
        w.stage("branch", [&] { br = reduced_branch(d, sp, g, ph, p, c.alphas, opts); });
      }
      w.scalar("fit_c", br.fit_c);
      std::vector<std::vector<std::string>> rows;
      for (const auto& sm : br.samples) {
        rows.push_back({detail::fmt(sm.alpha), detail::fmt(sm.lambda),
                        detail::fmt(sm.energy), detail::fmt(sm.newton_residual),
                        sm.ok ? "1" : "0"});
        if (!sm.ok) w.flag("branch sample at alpha " + detail::fmt(sm.alpha) +
                           " did not converge");
      }
      w.csv("branch.csv", {"alpha", "lambda", "energy", "residual", "ok"}, rows);
      break;
    }

    case Pipeline::Nodal: {
      Spectrum sp;
      w.stage("eigen", [&] { eigenpair(sp); });
      HalfFluxPhase ph;
      w.stage("symmetry", [&] { ph = half_flux_phase(g, d); });
      w.scalar("loop_defect", ph.loop_defect);
      GLParameters p(c.lambda, c.kappa);
      Branch br;
      w.stage("branch", [&] { br = reduced_branch(d, sp, g, ph, p, {c.nodal_alpha}); });
      if (br.samples.empty() || !br.samples.back().ok) {
        w.flag("reduced branch did not converge at the nodal amplitude");
        break;
      }
      NodalReport rep;
      w.stage("nodal", [&] {
        rep = nodal_set(d, br.samples.back().state.u, ph, c.nodal_epsilon);
      });
      w.scalar("nodal_components", rep.curve_components);
      w.scalar("nodal_slits", rep.slits);
      w.scalar("nodal_epsilon", rep.epsilon);
      json touches = json::array();
      for (const auto& t : rep.touches) touches.push_back(std::vector<int>(t.begin(), t.end()));
      w.scalar("nodal_touches", touches);
      std::vector<std::vector<std::string>> rows;
      for (auto [i, j] : rep.zero_cells)
        rows.push_back({std::to_string(i), std::to_string(j),
                        detail::fmt(d.cell_x(i)), detail::fmt(d.cell_y(j))});
      w.csv("nodal_cells.csv", {"i", "j", "x", "y"}, rows);
      w.csv("state.csv", {"i", "j", "x", "y", "abs", "re", "im"},
            detail::field_rows(d, br.samples.back().state.u));
      break;
    }

    case Pipeline::PhaseDiagram: {
      Spectrum sp;
      w.stage("eigen", [&] { eigenpair(sp); });
      GLParameters p(c.lambda, c.kappa);
      double kappa_c_val = std::numeric_limits<double>::quiet_NaN();
      w.stage("coefficients", [&] {
        try {
          kappa_c_val = coefficients(d, sp, g, p).kappa_c;
        } catch (const std::exception& e) {
          w.note(std::string("kappa_c unavailable: ") + e.what());
        }
      });
      std::vector<PhasePoint> pts;
      w.stage("sweep", [&] {
        pts = sweep_lambda_opt(d, g, sp, c.phase_kappas, c.phase_tol, c.threads);
      });
      w.scalar("kappa_c", kappa_c_val);
      std::vector<std::vector<std::string>> rows;
      json probes = json::array();
      for (const auto& pt : pts) {
        rows.push_back({detail::fmt(pt.kappa), detail::fmt(pt.lambda_lo),
                        detail::fmt(pt.lambda_hi), detail::fmt(pt.lambda1),
                        detail::fmt(kappa_c_val)});
        if (pt.flagged) w.flag("threshold search flagged at kappa " + detail::fmt(pt.kappa));
        for (const auto& pr : pt.verdicts)
          probes.push_back({{"kappa", pt.kappa},
                            {"lambda", pr.lambda},
                            {"energy", pr.best_energy},
                            {"normal_wins", pr.verdict == PhaseVerdict::NormalWins},
                            {"converged", pr.converged}});
      }
      w.scalar("probes", probes);
      w.csv("sweep.csv", {"kappa", "lambda_lo", "lambda_hi", "lambda1", "kappa_c"}, rows);
      break;
    }

    case Pipeline::Convert: {
      ScalingResult r;
      w.stage("convert", [&] {
        PhysicalParameters ph;
        ph.a = c.physical.a;
        ph.b = c.physical.b;
        ph.m = c.physical.m;
        ph.e = c.physical.e;
        ph.c_light = c.physical.c_light;
        ph.hbar = c.physical.hbar;
        r = scaling_convert(ph);
      });
      w.scalar("lambda", r.params.lambda);
      w.scalar("kappa", r.params.kappa);
      w.scalar("energy_scale", r.energy_scale);
      w.scalar("field_scale", r.field_scale);
      if (c.domain_present) {
        HatRescale hr = hat_rescale(r.params, d);
        w.scalar("hat_length_factor", hr.length_factor);
        w.scalar("hat_field_factor", hr.field_factor);
        w.scalar("hat_area", hr.area);
      }
      break;
    }
  }

  return w.finish();
}

// Scalar-by-scalar comparison of two manifests from the same pipeline.
inline nlohmann::json compare(const nlohmann::json& a, const nlohmann::json& b,
                              double rtol = 1e-12) {
  using nlohmann::json;
  if (a.value("pipeline", "") != b.value("pipeline", ""))
    throw std::invalid_argument("cannot compare manifests from different pipelines (" +
                                a.value("pipeline", "?") + " vs " + b.value("pipeline", "?") + ")");
  json rep;
  rep["pipeline"] = a.value("pipeline", "");
  rep["rtol"] = rtol;
  json diffs = json::array();
  double max_rel = 0;
  const json& sa = a.at("scalars");
  const json& sb = b.at("scalars");
  auto visit = [&](const std::string& key) {
    if (!sa.contains(key) || !sb.contains(key)) {
      diffs.push_back({{"scalar", key}, {"issue", "missing on one side"}});
      return;
    }
    const json &va = sa.at(key), &vb = sb.at(key);
    if (va.is_number() && vb.is_number()) {
      double x = va.get<double>(), y = vb.get<double>();
      double den = std::max({std::abs(x), std::abs(y), 1e-300});
      double rel = std::abs(x - y) / den;
      max_rel = std::max(max_rel, rel);
      if (rel > rtol) diffs.push_back({{"scalar", key}, {"a", x}, {"b", y}, {"rel", rel}});
    } else if (va != vb) {
      diffs.push_back({{"scalar", key}, {"a", va}, {"b", vb}});
    }
  };
  for (auto it = sa.begin(); it != sa.end(); ++it) visit(it.key());
  for (auto it = sb.begin(); it != sb.end(); ++it)
    if (!sa.contains(it.key())) visit(it.key());
  rep["diffs"] = diffs;
  rep["max_rel"] = max_rel;
  rep["equal"] = diffs.empty();
  return rep;
}

inline nlohmann::json load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest '" + path + "'");
  nlohmann::json j;
  in >> j;
  return j;
}

}  // namespace gl2d
