#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "nholo/errors.hpp"
#include "nholo/runner.hpp"
#include "nholo/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Off-diagonal nonholonomic Einstein solutions: generate, verify and report"};
  app.set_version_flag("--version", std::string("nholo ") + NHOLO_VERSION);
  app.require_subcommand(1);

  std::string scenario_path, out_path, backend, grid, theta;
  std::optional<double> tol;
  for (const char* name : {"generate", "verify", "convergence", "horizon", "star", "finsler"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--scenario", scenario_path, "Scenario file")->required();
    sub->add_option("--out", out_path, "Report path (stdout when omitted)");
    sub->add_option("--backend", backend, "Derivative backend")->check(CLI::IsMember({"dual", "fd"}));
    sub->add_option("--tol", tol, "Override every residual tolerance");
    sub->add_option("--grid", grid, "Grid size NxNxN");
    sub->add_option("--theta", theta, "Value or comma-separated sweep for the sweep parameter");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? nholo::kExitPass : nholo::kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    nholo::Scenario sc = nholo::load_scenario(scenario_path);
    nholo::ScenarioOverrides o;
    if (!backend.empty()) o.backend = backend;
    o.tol = tol;
    if (!grid.empty()) o.grid = nholo::parse_grid_size(grid);
    if (!theta.empty()) o.theta = nholo::parse_number_list(theta);
    nholo::apply_overrides(sc, o);

    const nholo::Report r = nholo::run_command(command, sc);
    if (out_path.empty()) {
      nholo::write_report(std::cout, r, sc);
    } else {
      std::ofstream out(out_path);
      if (!out) throw nholo::ConfigError("cannot write '" + out_path + "'");
      nholo::write_report(out, r, sc);
    }
    std::cerr << command << ": " << (r.pass ? "PASS" : "FAIL") << '\n';
    return r.pass ? nholo::kExitPass : nholo::kExitFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return nholo::exit_code_for(e);
  }
}
