// Batch front-end: validate and execute run configurations, compare result
// manifests. Exit codes: 0 success, 2 flagged (a stage did not converge),
// 1 error (bad configuration, I/O failure, solver exception).

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "gl2d/config.hpp"
#include "gl2d/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"2D Ginzburg-Landau toolbox: eigenpairs, minimization, branch "
               "continuation, nodal sets, phase diagrams"};
  app.require_subcommand(1);

  std::string config_path, out_root;
  if (const char* env = std::getenv("GL2D_OUTPUT_ROOT")) out_root = env;
  long seed_override = -1;
  int threads_override = 0;

  CLI::App* cmd_run = app.add_subcommand("run", "execute a run configuration");
  cmd_run->add_option("config", config_path, "configuration file")->required();
  cmd_run->add_option("--seed", seed_override, "override run.seed");
  cmd_run->add_option("--threads", threads_override, "override run.threads");
  cmd_run->add_option("--output-root", out_root,
                      "directory under which run.output_dir is created "
                      "(default $GL2D_OUTPUT_ROOT)");

  std::string path_a, path_b;
  double rtol = 1e-12;
  CLI::App* cmd_cmp = app.add_subcommand("compare", "diff two result manifests");
  cmd_cmp->add_option("a", path_a, "first manifest.json")->required();
  cmd_cmp->add_option("b", path_b, "second manifest.json")->required();
  cmd_cmp->add_option("--rtol", rtol, "relative tolerance for scalar equality");

  CLI::App* cmd_val = app.add_subcommand("validate", "check a configuration and exit");
  cmd_val->add_option("config", config_path, "configuration file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_val->parsed()) {
      gl2d::load_config_file(config_path);
      std::printf("ok: %s\n", config_path.c_str());
      return 0;
    }
    if (cmd_run->parsed()) {
      gl2d::RunConfig c = gl2d::load_config_file(config_path);
      if (seed_override >= 0) c.seed = uint64_t(seed_override);
      if (threads_override > 0) c.threads = threads_override;
      gl2d::RunResult r = gl2d::run(c, out_root);
      std::printf("%s: %s\n", r.manifest["status"].get<std::string>().c_str(),
                  r.manifest_path.c_str());
      return r.exit_code;
    }
    if (cmd_cmp->parsed()) {
      nlohmann::json rep = gl2d::compare(gl2d::load_manifest(path_a),
                                         gl2d::load_manifest(path_b), rtol);
      std::printf("%s\n", rep.dump(2).c_str());
      return rep["equal"].get<bool>() ? 0 : 2;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
