#pragma once

#include <Eigen/Core>

#include <exception>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "nholo/dgeometry.hpp"
#include "nholo/scenario.hpp"
#include "nholo/solution_engine.hpp"

namespace nholo {

#ifndef NHOLO_VERSION
#define NHOLO_VERSION "unknown"
#endif

// A metric family resolved from a scenario.
struct BuiltMetric {
  DMetric metric;
  SourceDiag source{0.0, 0.0};
  std::function<Eigen::Matrix4d(const Point&)> einstein_source;  // empty for vacuum
  bool ansatz = false;  // subject to the reduced d-connection equations
  std::optional<GeneratingData> generating;
};

BuiltMetric build_family(const Scenario& sc, const std::string& family, const ParamMap& params);
inline BuiltMetric build_family(const Scenario& sc) { return build_family(sc, sc.family, sc.params); }
GeneratingData generating_data(const Scenario& sc, const ParamMap& params);

// Covariant source g_h Y_2 + g_v Y_4 matching E^alpha_beta = diag(Y_2, Y_2, Y_4, Y_4) in the N-adapted frame.
Eigen::Matrix4d adapted_source(const DMetric& d, const SourceDiag& src, const Point& p);

struct Report {
  std::string command;
  std::string body;
  bool pass = true;
  std::optional<DMetric> metric;  // set by generate and verify
};

Report run_generate(const Scenario& sc);
Report run_verify(const Scenario& sc);
Report run_convergence(const Scenario& sc);
Report run_horizon(const Scenario& sc);
Report run_star(const Scenario& sc);
Report run_finsler(const Scenario& sc);
Report run_command(const std::string& command, const Scenario& sc);

struct LinearFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

// 64-bit FNV-1a of the scenario text, as hex.
std::string scenario_hash(const std::string& text);

// Provenance header then the body; the timestamp is the only run-dependent line.
void write_report(std::ostream& os, const Report& r, const Scenario& sc, bool timestamp = true);

// 0 pass, 1 residual failure, 2 configuration error, 3 numeric error.
enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitConfig = 2, kExitNumeric = 3 };
int exit_code_for(const std::exception& e);

}  // namespace nholo
