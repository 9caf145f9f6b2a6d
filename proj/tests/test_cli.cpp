#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "gl2d/config.hpp"
#include "gl2d/run.hpp"

using namespace gl2d;
namespace fs = std::filesystem;

namespace {

std::string temp_dir() {
  static std::mt19937_64 rng(std::random_device{}());
  fs::path p = fs::temp_directory_path() /
               ("gl2d_test_" + std::to_string(rng()));
  fs::create_directories(p);
  return p.string();
}

std::string annulus_config(const std::string& pipeline, const std::string& out,
                           const std::string& extra = "") {
  return "[run]\npipeline = " + pipeline + "\noutput_dir = " + out +
         "\n\n[domain]\nshape = annulus\nn = 24\nouter_radius = 0.48\n"
         "hole_cx = 0.08\nhole_cy = 0.048\nhole_r = 0.15\n\n"
         "[field]\nprofile = uniform_in_holes\nflux = 0.5\n" + extra;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool mentions(const ConfigError& e, const std::string& needle) {
  for (const auto& i : e.issues)
    if (i.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("ini: comments, whitespace, and values parse; errors carry line numbers") {
  IniFile f = IniFile::parse_string(
      "# leading comment\n[run]\n  pipeline = check  ; trailing\n\n"
      "[domain]\nshape = disk\nn = 16\n");
  CHECK(f.sections.at("run").at("pipeline") == "check");
  CHECK(f.sections.at("domain").at("n") == "16");

  CHECK_THROWS_AS(IniFile::parse_string("pipeline = check\n"), ConfigError);  // no section
  CHECK_THROWS_AS(IniFile::parse_string("[run\npipeline = check\n"), ConfigError);
  CHECK_THROWS_AS(IniFile::parse_string("[run]\nnot a pair\n"), ConfigError);
  try {
    IniFile::parse_string("[run]\npipeline = a\npipeline = b\n");
    FAIL("duplicate key accepted");
  } catch (const ConfigError& e) {
    CHECK(mentions(e, "duplicate key 'run.pipeline'"));
    CHECK(mentions(e, ":3:"));
  }
}

TEST_CASE("config: unknown sections and keys are all reported at once") {
  std::string text =
      "[run]\npipeline = check\nbogus_key = 1\n\n[domain]\nshape = disk\nn = 16\n\n"
      "[field]\nprofile = none\n\n[made_up]\nx = 1\n";
  try {
    load_config(IniFile::parse_string(text));
    FAIL("invalid config accepted");
  } catch (const ConfigError& e) {
    CHECK(mentions(e, "run.bogus_key: unknown key"));
    CHECK(mentions(e, "[made_up]: unknown section"));
    CHECK(e.issues.size() == 2);
  }
}

TEST_CASE("config: missing pipeline requirements are listed per field") {
  std::string text =
      "[run]\npipeline = minimize\n\n[domain]\nshape = disk\nn = 16\n\n"
      "[field]\nprofile = none\n";
  try {
    load_config(IniFile::parse_string(text));
    FAIL("invalid config accepted");
  } catch (const ConfigError& e) {
    CHECK(mentions(e, "parameters.lambda"));
    CHECK(mentions(e, "parameters.kappa"));
  }
}

TEST_CASE("config: reduced-branch rejects fluxes violating the half-flux precondition") {
  std::string text =
      "[run]\npipeline = reduced-branch\n\n[domain]\nshape = annulus\nn = 24\n"
      "outer_radius = 0.48\nhole_cx = 0.08\nhole_cy = 0.048\nhole_r = 0.15\n\n"
      "[field]\nprofile = uniform_in_holes\nflux = 0.3\n\n"
      "[parameters]\nkappa = 1.0\n\n[branch]\nalphas = 0.1\n";
  try {
    load_config(IniFile::parse_string(text));
    FAIL("invalid config accepted");
  } catch (const ConfigError& e) {
    CHECK(mentions(e, "half-flux"));
    CHECK(mentions(e, "0.3"));
  }
  // Half-integer fluxes pass the same validation.
  std::string ok = text;
  ok.replace(ok.find("flux = 0.3"), 10, "flux = 1.5");
  CHECK_NOTHROW(load_config(IniFile::parse_string(ok)));
}

TEST_CASE("run: eigen pipeline emits manifest plus mode file") {
  std::string out = temp_dir();
  RunConfig c = load_config(IniFile::parse_string(annulus_config("eigen", out)));
  RunResult r = run(c);
  CHECK(r.exit_code == 0);
  CHECK(r.manifest["status"] == "ok");
  CHECK(r.manifest["pipeline"] == "eigen");
  CHECK(r.manifest["scalars"]["lambda1"].get<double>() > 0);
  CHECK(r.manifest["scalars"]["gap"].get<double>() > 0);
  CHECK(r.manifest["config"]["field"]["flux"] == "0.5");
  // Every emitted file is listed, and every listed file exists.
  bool saw_mode = false, saw_manifest = false;
  for (const auto& f : r.manifest["files"]) {
    std::string name = f.get<std::string>();
    CHECK(fs::exists(fs::path(out) / name));
    saw_mode |= name == "mode.csv";
    saw_manifest |= name == "manifest.json";
  }
  CHECK(saw_mode);
  CHECK(saw_manifest);
  fs::remove_all(out);
}

TEST_CASE("run: identical config and seed produce bit-identical data files") {
  std::string out1 = temp_dir(), out2 = temp_dir();
  std::string extra = "\n[parameters]\nlambda = 3.0\nkappa = 1.0\n";
  RunConfig c1 = load_config(IniFile::parse_string(annulus_config("minimize", out1, extra)));
  RunConfig c2 = load_config(IniFile::parse_string(annulus_config("minimize", out2, extra)));
  RunResult r1 = run(c1);
  RunResult r2 = run(c2);
  CHECK(r1.exit_code == 0);
  CHECK(r2.exit_code == 0);
  CHECK(slurp(fs::path(out1) / "state.csv") == slurp(fs::path(out2) / "state.csv"));

  nlohmann::json diff = compare(r1.manifest, r2.manifest);
  CHECK(diff["equal"].get<bool>());
  CHECK(diff["diffs"].empty());
  fs::remove_all(out1);
  fs::remove_all(out2);
}

TEST_CASE("run: reduced-branch pipeline writes the branch table") {
  std::string out = temp_dir();
  std::string extra = "\n[parameters]\nkappa = 1.0\n\n[branch]\nalphas = 0.05, 0.1\n";
  RunConfig c = load_config(IniFile::parse_string(annulus_config("reduced-branch", out, extra)));
  RunResult r = run(c);
  CHECK(r.exit_code == 0);
  CHECK(r.manifest["scalars"]["fit_c"].get<double>() > 0);
  CHECK(r.manifest["scalars"]["kappa_c"].get<double>() <= 1e-5);
  std::string csv = slurp(fs::path(out) / "branch.csv");
  CHECK(csv.rfind("alpha,lambda,energy,residual,ok\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + two samples
  fs::remove_all(out);
}

TEST_CASE("run: nodal pipeline reports the slitting verdict") {
  std::string out = temp_dir();
  // epsilon 0.1: at this coarse grid the default 0.05 threshold leaves gaps
  // in the flagged line (cells next to the node are not yet that small).
  std::string extra = "\n[parameters]\nkappa = 1.0\n\n[nodal]\nalpha = 0.1\nepsilon = 0.1\n";
  RunConfig c = load_config(IniFile::parse_string(annulus_config("nodal", out, extra)));
  RunResult r = run(c);
  CHECK(r.exit_code == 0);
  CHECK(r.manifest["scalars"]["nodal_components"].get<int>() >= 1);
  CHECK(r.manifest["scalars"]["nodal_slits"].get<bool>());
  CHECK(fs::exists(fs::path(out) / "nodal_cells.csv"));
  fs::remove_all(out);
}

TEST_CASE("run: convert pipeline reproduces the coupling formulas") {
  std::string out = temp_dir();
  std::string text =
      "[run]\npipeline = convert\noutput_dir = " + out + "\n\n" +
      "[physical]\na = -2.0\nb = 3.0\nm = 1.5\ne = 2.0\nc_light = 100.0\nhbar = 0.5\n";
  RunConfig c = load_config(IniFile::parse_string(text));
  RunResult r = run(c);
  CHECK(r.exit_code == 0);
  double lambda = r.manifest["scalars"]["lambda"].get<double>();
  double kappa = r.manifest["scalars"]["kappa"].get<double>();
  CHECK(lambda == doctest::Approx(4.0 * 1.5 * 2.0 / 0.25).epsilon(1e-14));
  CHECK(kappa == doctest::Approx(1.5 * 100.0 / (2.0 * 0.5) *
                                 std::sqrt(3.0 / (8.0 * M_PI))).epsilon(1e-14));
  CHECK(r.manifest["scalars"]["energy_scale"].get<double>() ==
        doctest::Approx(2.0 * 0.25 / (4.0 * 1.5 * 3.0)).epsilon(1e-14));
  fs::remove_all(out);
}

TEST_CASE("compare: mismatched pipelines are rejected, scalar drifts reported") {
  nlohmann::json a = {{"pipeline", "eigen"},
                      {"scalars", {{"lambda1", 1.0}, {"gap", 2.0}}}};
  nlohmann::json b = {{"pipeline", "minimize"}, {"scalars", {{"energy", 0.0}}}};
  CHECK_THROWS_AS(compare(a, b), std::invalid_argument);

  nlohmann::json a2 = a;
  a2["scalars"]["lambda1"] = 1.0 + 1e-6;
  nlohmann::json rep = compare(a, a2, 1e-9);
  CHECK(!rep["equal"].get<bool>());
  REQUIRE(rep["diffs"].size() == 1);
  CHECK(rep["diffs"][0]["scalar"] == "lambda1");
  CHECK(rep["max_rel"].get<double>() == doctest::Approx(1e-6).epsilon(1e-3));

  nlohmann::json rep2 = compare(a, a2, 1e-3);
  CHECK(rep2["equal"].get<bool>());
}
