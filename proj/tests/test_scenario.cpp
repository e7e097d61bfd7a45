#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "nholo/catalog.hpp"
#include "nholo/errors.hpp"
#include "nholo/runner.hpp"
#include "nholo/scenario.hpp"

using namespace nholo;

namespace {

std::string scenario_file(const std::string& name) { return std::string(NHOLO_SCENARIO_DIR) + "/" + name; }

std::string body_of(const Report& r, const Scenario& sc) {
  std::ostringstream os;
  write_report(os, r, sc, false);
  return os.str();
}

const char* kMinimal = R"([scenario]
family = schwarzschild

[grid]
x1 = 3 10
x2 = 0.5 2.5
v = 0 6
n = 9

[params]
mu0 = 1
)";

}  // namespace

TEST_CASE("config parsing") {
  const Config c = Config::parse("# comment\n[scenario]\n  family = rotoid   # trailing\n; other\n[fields]\npsi = x1*x2\n");
  REQUIRE(c.find("scenario", "family"));
  CHECK(c.find("scenario", "family")->value == "rotoid");
  CHECK(c.find("scenario", "family")->line == 3);
  CHECK(c.find("scenario", "family")->column == 12);
  CHECK(c.find("fields", "psi")->value == "x1*x2");
  CHECK(c.find("fields", "nope") == nullptr);
  CHECK(c.keys("fields") == std::vector<std::string>{"psi"});
}

TEST_CASE("config errors carry line and column") {
  auto expect = [](const std::string& text, int line, int column) {
    try {
      parse_scenario(text);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == line);
      CHECK(e.column() == column);
    }
  };
  expect("[scenario]\nfamily = rotoid\n[bogus]\n", 3, 2);
  expect("[scenario]\nfamily = rotoid\nnokey\n", 3, 1);
  expect("[scenario]\nfamily = rotoid\nfamily = schwarzschild\n", 3, 1);
  expect("family = rotoid\n", 1, 1);
  expect("[scenario\n", 1, 10);
  expect("[scenario]\nfamily = rotoid\n[params]\nmu0 = abc\n", 4, 7);
  expect("[scenario]\nfamily = rotoid\n[grid]\nx1 = 3\n", 4, 6);

  // expression errors point into the file
  const Scenario sc = parse_scenario("[scenario]\nfamily = rotoid\n[fields]\npsi = x1 + * x2\n");
  try {
    sc.field("psi", 0.0);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
    CHECK(e.column() >= 7);
    CHECK(e.column() <= 12);
  }
  CHECK_THROWS_AS(parse_scenario("[scenario]\nname = x\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("[scenario]\nfamily = rotoid\n[grid]\nn = 5x9x9\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("[scenario]\nfamily = rotoid\nbackend = spectral\n"), ConfigError);
}

TEST_CASE("scenario values and overrides") {
  Scenario sc = parse_scenario(std::string(kMinimal) + "thetabar = 0.01, 0.02 0.05\n[tolerances]\neinstein = 1e-9\n");
  CHECK(sc.grid.lo[0] == 3.0);
  CHECK(sc.grid.hi[0] == 10.0);
  CHECK(sc.grid.n == std::array<int, 3>{9, 9, 9});
  CHECK(sc.param("mu0", 0.0) == 1.0);
  CHECK(sc.values("thetabar") == std::vector<double>{0.01, 0.02, 0.05});
  CHECK(sc.tolerance("einstein", 1.0) == 1e-9);
  CHECK(sc.tolerance("other", 1.0) == 1.0);

  ScenarioOverrides o;
  o.tol = 1e-3;
  o.grid = std::array<int, 3>{9, 11, 13};
  o.backend = "fd";
  o.theta = std::vector<double>{0.2, 0.3};
  apply_overrides(sc, o);
  CHECK(sc.tolerance("einstein", 1.0) == 1e-3);
  CHECK(sc.grid.n == std::array<int, 3>{9, 11, 13});
  CHECK(sc.diff.backend == Backend::FiniteDifference);
  CHECK(sc.param("theta", 0.0) == 0.2);

  ScenarioOverrides bad;
  bad.grid = std::array<int, 3>{8, 9, 9};
  CHECK_THROWS_AS(apply_overrides(sc, bad), ConfigError);
  CHECK(parse_grid_size("17x9x33") == std::array<int, 3>{17, 9, 33});
  CHECK(parse_grid_size("12") == std::array<int, 3>{12, 12, 12});
  CHECK_THROWS_AS(parse_grid_size("9x9"), ConfigError);
  CHECK_THROWS_AS(parse_number_list("1 two"), ConfigError);
}

TEST_CASE("theta override follows the sweep key") {
  Scenario sc = parse_scenario("[scenario]\nfamily = rotoid\nsweep = thetabar\n");
  ScenarioOverrides o;
  o.theta = std::vector<double>{0.01, 0.03};
  apply_overrides(sc, o);
  CHECK(sc.values("thetabar") == std::vector<double>{0.01, 0.03});
  CHECK(sc.values("theta").empty());
}

TEST_CASE("reports are deterministic and carry provenance") {
  const Scenario sc = parse_scenario(kMinimal, "inline");
  const std::string a = body_of(run_generate(sc), sc), b = body_of(run_generate(sc), sc);
  CHECK(a == b);
  CHECK(a.find("# nholo ") == 0);
  CHECK(a.find("# scenario_hash\tfnv1a64:" + scenario_hash(kMinimal)) != std::string::npos);
  CHECK(a.find("# generated") == std::string::npos);
  CHECK(a.find("# verdict\tPASS") != std::string::npos);
  std::ostringstream stamped;
  write_report(stamped, run_generate(sc), sc, true);
  CHECK(stamped.str().find("# generated\t") != std::string::npos);
  CHECK(scenario_hash("") == "cbf29ce484222325");
  CHECK(scenario_hash("a") == "af63dc4c8601ec8c");
}

TEST_CASE("exit code mapping") {
  CHECK(exit_code_for(ParseError("x", 1, 1)) == kExitConfig);
  CHECK(exit_code_for(ConfigError("x")) == kExitConfig);
  CHECK(exit_code_for(SingularChart("x")) == kExitConfig);
  CHECK(exit_code_for(ChartViolation("x")) == kExitConfig);
  CHECK(exit_code_for(NonConvergent("x")) == kExitNumeric);
  CHECK(exit_code_for(DegenerateMetric("x")) == kExitNumeric);
}

TEST_CASE("bundled scenarios") {
  SUBCASE("rotoid generate passes") {
    const Scenario sc = load_scenario(scenario_file("rotoid.ini"));
    const Report r = run_generate(sc);
    CHECK(r.pass);
    REQUIRE(r.metric);
  }
  SUBCASE("schwarzschild is Ricci flat to 1e-8") {
    const Scenario sc = load_scenario(scenario_file("schwarzschild.ini"));
    CHECK(sc.tolerance("einstein", 0.0) == 1e-8);
    CHECK(run_generate(sc).pass);
  }
  SUBCASE("crossing f = f0 is refused") {
    const Scenario sc = load_scenario(scenario_file("singular_f0.ini"));
    CHECK_THROWS_AS(run_generate(sc), SingularChart);
  }
  SUBCASE("LC vacuum passes all three sections") {
    const Report r = run_verify(load_scenario(scenario_file("lc_vacuum.ini")));
    CHECK(r.pass);
    CHECK(r.body.find("# section\td-connection") != std::string::npos);
    CHECK(r.body.find("# section\tlevi-civita constraints") != std::string::npos);
    CHECK(r.body.find("# section\teinstein") != std::string::npos);
    CHECK(r.body.find("FAIL") == std::string::npos);
  }
  SUBCASE("arbitrary w: d-connection passes, LC fails, Einstein skipped") {
    const Report r = run_verify(load_scenario(scenario_file("rotoid_arbitrary_w.ini")));
    CHECK_FALSE(r.pass);
    const std::size_t lc = r.body.find("levi-civita");
    REQUIRE(lc != std::string::npos);
    CHECK(r.body.substr(0, lc).find("FAIL") == std::string::npos);
    CHECK(r.body.find("lc_w\t") != std::string::npos);
    CHECK(r.body.find("# skipped") != std::string::npos);
  }
  SUBCASE("projected w passes") {
    CHECK(run_verify(load_scenario(scenario_file("rotoid_lc.ini"))).pass);
  }
  SUBCASE("sourced product metric matches the adapted source") {
    CHECK(run_verify(load_scenario(scenario_file("lambda_source.ini"))).pass);
  }
  SUBCASE("nc_gamma against its fluid source") {
    CHECK(run_verify(load_scenario(scenario_file("nc_gamma.ini"))).pass);
  }
  SUBCASE("convergence") {
    for (const char* f : {"convergence_psi.ini", "convergence_fd.ini", "convergence_dual.ini"}) {
      INFO(f);
      CHECK(run_convergence(load_scenario(scenario_file(f))).pass);
    }
  }
  SUBCASE("horizon sweep") {
    const Report r = run_horizon(load_scenario(scenario_file("horizon.ini")));
    CHECK(r.pass);
    CHECK(r.body.find("fit_r2") != std::string::npos);
  }
  SUBCASE("star") { CHECK(run_star(load_scenario(scenario_file("star.ini"))).pass); }
  SUBCASE("finsler") { CHECK(run_finsler(load_scenario(scenario_file("finsler_schwarzschild.ini"))).pass); }
}

TEST_CASE("convergence needs three refinements") {
  Scenario sc = load_scenario(scenario_file("convergence_fd.ini"));
  sc.lists["refinements"] = {9, 17};
  CHECK_THROWS_AS(run_convergence(sc), ConfigError);
}

TEST_CASE("non-smooth data is refused by the sign certificate") {
  const Scenario sc = parse_scenario(R"([scenario]
family = generator
convergence = residual
backend = fd
[grid]
x1 = 0 1
x2 = 0 1
v = -0.5 0.5
n = 9
[fields]
psi = x1*x2
f = 2 + v + abs(v)*0.1
f0 = -1
)");
  CHECK_THROWS_AS(run_convergence(sc), SingularChart);
}

TEST_CASE("horizon shapes") {
  const char* base = R"([scenario]
family = rotoid
[params]
mu0 = 1
q0 = 4
samples = 16
)";
  SUBCASE("thetabar = 0 gives r+ = 2 mu0") {
    const Scenario sc = parse_scenario(std::string(base) + "thetabar = 0\nomega0 = 1\n");
    const Report r = run_horizon(sc);
    CHECK(r.pass);
    std::istringstream is(r.body.substr(r.body.find("phi\tr_plus\n") + 11));
    for (int k = 0; k < 16; ++k) {
      double phi, rp;
      is >> phi >> rp;
      CHECK(rp == doctest::Approx(2.0).epsilon(1e-12));
    }
  }
  SUBCASE("omega0 = 2 has period pi") {
    const Scenario sc = parse_scenario(std::string(base) + "thetabar = 0.05\nomega0 = 2\n");
    const Report r = run_horizon(sc);
    std::istringstream is(r.body.substr(r.body.find("phi\tr_plus\n") + 11));
    std::vector<double> rp(16);
    for (int k = 0; k < 16; ++k) {
      double phi;
      is >> phi >> rp[k];
    }
    for (int k = 0; k < 8; ++k) CHECK(rp[k] == doctest::Approx(rp[k + 8]).epsilon(1e-12));
    CHECK(std::abs(rp[0] - rp[2]) > 1e-3);
  }
  CHECK_THROWS_AS(run_horizon(parse_scenario(kMinimal)), ConfigError);
}

TEST_CASE("finsler failures are reported") {
  Scenario sc = parse_scenario(R"([scenario]
family = finsler
source = schwarzschild
[grid]
x1 = 3 6
x2 = 0.5 2.5
v = 0.5 2
y4 = 1
n = 9
[fields]
F = sqrt((1 + x1*x1 + x2*x2)*v*v + (2 + x1*x2)*y4*y4)
)");
  const Report r = run_finsler(sc);
  CHECK_FALSE(r.pass);
  CHECK(r.body.find("# section\tfailures") != std::string::npos);
}

TEST_CASE("linear fit") {
  const LinearFit f = linear_fit({0.0, 1.0, 2.0}, {1.0, 3.0, 5.0});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK_THROWS_AS(linear_fit({1.0}, {1.0}), ConfigError);
}
