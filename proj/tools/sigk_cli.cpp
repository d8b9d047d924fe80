#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sigk/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Verification runner for sigma_k augmented-Hessian equations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", sigk::kVersion);

  std::string config;
  std::string axis;
  int k = 0;
  int n = 0;
  std::string p;
  std::string which;

  auto* verify = app.add_subcommand("verify", "run the checks of a suite config");
  verify->add_option("--config", config, "suite config (JSON)")->required();
  auto* solve = app.add_subcommand("solve", "solve a problem and write the field and history");
  solve->add_option("--config", config, "suite config (JSON)")->required();
  auto* moser = app.add_subcommand("moser", "print a Moser exponent schedule");
  moser->add_option("--k", k, "order k")->required();
  moser->add_option("--n", n, "dimension n")->required();
  moser->add_option("--p", p, "integrability exponent, decimal or a/b")->required();
  moser->add_option("--case", which, "case1, case2, k2-general or k3-general")->required();
  auto* sweep = app.add_subcommand("sweep", "run one check across an axis");
  sweep->add_option("--config", config, "suite config (JSON)")->required();
  sweep->add_option("--axis", axis, "h, q or grid")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return sigk::kExitConfigError;
  }

  if (*verify) return sigk::cli_verify(config);
  if (*solve) return sigk::cli_solve(config);
  if (*moser) return sigk::cli_moser(k, n, p, which);
  return sigk::cli_sweep(config, axis);
}
