#include "nholo/runner.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <ctime>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include "nholo/catalog.hpp"
#include "nholo/errors.hpp"
#include "nholo/finsler.hpp"
#include "nholo/starprod.hpp"

namespace nholo {

namespace {

const ScalarField vv = ScalarField::coordinate(V);

std::vector<std::string> split_words(const std::string& text) {
  std::string s = text;
  for (char& c : s)
    if (c == ',') c = ' ';
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

bool truthy(const std::string& s) { return s == "true" || s == "1" || s == "yes" || s == "on"; }

Signs parse_signs(const std::string& text) {
  const std::vector<double> v = parse_number_list(text);
  if (v.size() != 4) throw ConfigError("signature needs four signs");
  Signs s{};
  for (int k = 0; k < 4; ++k) {
    if (v[k] != 1.0 && v[k] != -1.0) throw ConfigError("signature entries must be +1 or -1");
    s[k] = static_cast<int>(v[k]);
  }
  return s;
}

// [tolerances] entry that ignores --tol; used for fit-quality thresholds.
double threshold(const Scenario& sc, const std::string& key, double fallback) {
  const ConfigEntry* e = sc.config.find("tolerances", key);
  if (!e) return fallback;
  return parse_number_list(e->value).front();
}

ScalarField require_field(const Scenario& sc, const std::string& key, const ParamMap& p) {
  if (!sc.has_field(key)) throw ConfigError("[fields] needs '" + key + "' for family " + sc.family);
  return sc.field(key, 0.0, p);
}

SchwarzschildParams schwarzschild_params(const ParamMap& p, const Scenario& sc) {
  SchwarzschildParams s;
  auto get = [&](const char* k, double d) {
    const auto it = p.find(k);
    return it == p.end() ? sc.param(k, d) : it->second;
  };
  s.mu0 = get("mu0", 1.0);
  s.G = get("G", 1.0);
  s.c = get("c", 1.0);
  return s;
}

RotoidParams rotoid_params(const Scenario& sc, const ParamMap& p) {
  RotoidParams r;
  auto get = [&](const char* k, double d) {
    const auto it = p.find(k);
    return it == p.end() ? d : it->second;
  };
  r.mu0 = sc.field("mu0", get("mu0", 1.0), p);
  r.mu1 = sc.field("mu1", get("mu1", 0.0), p);
  r.q0 = sc.field("q0", get("q0", 4.0), p);
  r.omega0 = get("omega0", 1.0);
  r.phi0 = get("phi0", 0.0);
  r.theta_bar = get("thetabar", 0.0);
  r.s_uses_mu0 = truthy(sc.setting("s_uses_mu0", "false"));
  return r;
}

RotoidFrame rotoid_frame(const Scenario& sc, const ParamMap& p) {
  RotoidFrame f;
  f.psi = sc.field("psi", 0.0, p);
  f.w1 = sc.field("w1", 0.0, p);
  f.w2 = sc.field("w2", 0.0, p);
  f.n1 = sc.field("n1", 0.0, p);
  f.n2 = sc.field("n2", 0.0, p);
  return f;
}

SourceDiag field_source(const Scenario& sc, const ParamMap& p) {
  return SourceDiag{sc.field("upsilon2", 0.0, p), sc.field("upsilon4", 0.0, p)};
}

std::function<Eigen::Matrix4d(const Point&)> adapted_source_fn(const DMetric& d, const SourceDiag& src) {
  if (src.upsilon2.is_zero() && src.upsilon4.is_zero()) return {};
  return [d, src](const Point& p) { return adapted_source(d, src, p); };
}

// Index of sample k of `count` along an axis with n nodes.
int sample_index(int k, int count, int n) { return count > 1 ? k * (n - 1) / (count - 1) : 0; }

std::vector<Point> diagonal_samples(const Grid& g, int count = 9) {
  std::vector<Point> out;
  for (int k = 0; k < count; ++k)
    out.push_back(g.point(sample_index(k, count, g.n[0]), sample_index(k, count, g.n[1]),
                          sample_index(k, count, g.n[2])));
  return out;
}

void write_coefficients(std::ostream& os, const DMetric& d, const Grid& g) {
  os << "# section\tcoefficients\n";
  os << "x1\tx2\tv\ty4\tg1\tg2\th3\th4\tw1\tw2\tn1\tn2\n";
  const auto flags = os.flags();
  os << std::setprecision(10) << std::scientific;
  for (const Point& p : diagonal_samples(g)) {
    for (int q = 0; q < 4; ++q) os << p[q] << '\t';
    const ScalarField* f[] = {&d.g1, &d.g2, &d.h3, &d.h4, &d.N.w1, &d.N.w2, &d.N.n1, &d.N.n2};
    for (int k = 0; k < 8; ++k) os << (*f[k])(p) << (k < 7 ? '\t' : '\n');
  }
  os.flags(flags);
}

void write_section(std::ostream& os, const ResidualReport& r) {
  r.write_tsv(os);
  os << '\n';
}

void write_rows(std::ostream& os, const std::string& section, const std::string& grid,
                const std::vector<EquationResidual>& rows) {
  ResidualReport r;
  r.section = section;
  r.grid = grid;
  r.rows = rows;
  write_section(os, r);
}

void validate(const Scenario& sc, const BuiltMetric& b) {
  if (b.generating) validate_chart(*b.generating, sc.grid);
  if (sc.family == "schwarzschild" || sc.family == "nc_vacuum")
    check_schwarzschild_chart(schwarzschild_params(sc.params, sc), sc.grid.lo[0]);
  validate_signs(b.metric, sc.grid);
}

// Applies the optional LC projection w_i = d_i Phi / Phi*.
void apply_lc_potential(const Scenario& sc, BuiltMetric& b) {
  const ConfigEntry* e = sc.config.find("fields", "lc_potential");
  if (!e) return;
  const ScalarField phi = e->value == "h4" ? b.metric.h4 : sc.field("lc_potential", 0.0);
  b.metric = lc_project_w(b.metric, phi);
  if (b.einstein_source && !b.source.upsilon2.is_zero()) b.einstein_source = adapted_source_fn(b.metric, b.source);
}

BuiltMetric prepared(const Scenario& sc) {
  BuiltMetric b = build_family(sc);
  apply_lc_potential(sc, b);
  validate(sc, b);
  return b;
}

ResidualReport dconnection_section(const Scenario& sc, const BuiltMetric& b, const DiffOptions& opt) {
  const double tol = sc.tolerance("dconnection", 1e-7);
  ResidualReport r = dconnection_report(b.metric, b.source, sc.grid, tol, opt, true);
  for (auto& row : r.rows)
    if (row.id == "horizontal") row.tol = sc.tolerance("horizontal", tol);
  return r;
}

ResidualReport einstein_section(const Scenario& sc, const BuiltMetric& b, const DiffOptions& opt) {
  return einstein_report(coordinate_metric(b.metric), sc.grid, sc.tolerance("einstein", 1e-6), b.einstein_source,
                         opt);
}

double max_residual(const ResidualReport& r) {
  double m = 0.0;
  for (const auto& row : r.rows) m = std::max(m, row.max_abs);
  return m;
}

std::string fmt(double x, int digits = 6) {
  std::ostringstream os;
  os << std::setprecision(digits) << std::scientific << x;
  return os.str();
}

std::string verdict(bool pass) { return pass ? "PASS" : "FAIL"; }

}  // namespace

Eigen::Matrix4d adapted_source(const DMetric& d, const SourceDiag& src, const Point& p) {
  const double y2 = src.upsilon2(p), y4 = src.upsilon4(p);
  const Eigen::Vector4d diag(d.g1(p) * y2, d.g2(p) * y2, d.h3(p) * y4, d.h4(p) * y4);
  const Eigen::Matrix4d c = n_adapted_coframe(d.N, p);
  return c.transpose() * diag.asDiagonal() * c;
}

GeneratingData generating_data(const Scenario& sc, const ParamMap& p) {
  GeneratingData gd;
  gd.f = sc.field("f", vv, p);
  gd.f0 = sc.field("f0", 0.0, p);
  gd.h0 = sc.field("h0", 1.0, p);
  gd.varsigma0 = sc.field("varsigma0", 1.0, p);
  gd.n1_1 = sc.field("n1_1", 0.0, p);
  gd.n1_2 = sc.field("n1_2", 0.0, p);
  gd.n2_1 = sc.field("n2_1", 0.0, p);
  gd.n2_2 = sc.field("n2_2", 0.0, p);
  gd.upsilon2 = sc.field("upsilon2", 0.0, p);
  gd.upsilon4 = sc.field("upsilon4", 0.0, p);
  gd.w1_free = sc.field("w1", 0.0, p);
  gd.w2_free = sc.field("w2", 0.0, p);
  gd.eps = parse_signs(sc.setting("eps", "-1 -1 -1 1"));
  const auto th = p.find("theta");
  gd.theta = th == p.end() ? 0.0 : th->second;
  gd.v0 = sc.param("v0", 0.0);
  gd.breakpoint_step = sc.param("breakpoint_step", 0.0);
  gd.lc_mode = truthy(sc.setting("lc_mode", "false"));
  if (sc.has_field("psi")) {
    gd.psi = sc.field("psi", 0.0, p);
  } else if (gd.upsilon4.is_zero()) {
    gd.psi = 0.0;
  } else {
    const RectDomain dom{sc.grid.lo[0], sc.grid.hi[0], sc.grid.lo[1], sc.grid.hi[1]};
    const int n = static_cast<int>(sc.param("psi_nodes", 65));
    gd.psi = solve_psi(gd.upsilon4, dom, sc.field("psi_boundary", 0.0, p), gd.eps[0], gd.eps[1], n, n).psi;
  }
  return gd;
}

BuiltMetric build_family(const Scenario& sc, const std::string& family, const ParamMap& params) {
  BuiltMetric b;
  auto get = [&](const char* k, double d) {
    const auto it = params.find(k);
    return it == params.end() ? d : it->second;
  };
  if (family == "schwarzschild") {
    b.metric = schwarzschild_prime(schwarzschild_params(params, sc));
  } else if (family == "schwarzschild_xi") {
    if (!params.count("r_min") || !params.count("r_max"))
      throw ConfigError("schwarzschild_xi needs params r_min and r_max");
    b.metric = schwarzschild_xi(schwarzschild_params(params, sc), get("theta", 0.0), params.at("r_min"),
                                params.at("r_max"))
                   .metric;
  } else if (family == "nc_vacuum") {
    b.metric = nc_vacuum_metric(schwarzschild_params(params, sc), get("theta", 0.0));
  } else if (family == "nc_gamma") {
    const double mu0 = get("mu0", 1.0), theta = get("theta", 0.1), G = get("G", 1.0);
    if (!(theta > 0.0)) throw ConfigError("nc_gamma needs theta > 0");
    b.metric = nc_gamma_metric(mu0, theta);
    const ScalarField rho = gaussian_density(mu0, theta);
    const CoordinateMetric g = coordinate_metric(b.metric);
    b.einstein_source = [g, rho, G](const Point& p) -> Eigen::Matrix4d {
      return 8.0 * std::numbers::pi * G * metric_value(g, p) * nc_matter_source(rho, p);
    };
  } else if (family == "rotoid" || family == "solitonic_rotoid") {
    const RotoidParams rp = rotoid_params(sc, params);
    const RotoidFrame fr = rotoid_frame(sc, params);
    b.metric = family == "rotoid" ? rotoid_metric(rp, fr)
                                  : solitonic_rotoid_metric(require_field(sc, "eta", params), rp, fr);
    b.ansatz = true;
    b.source = field_source(sc, params);
  } else if (family == "generator") {
    GeneratingData gd = generating_data(sc, params);
    b.metric = build_solution(gd);
    b.ansatz = true;
    b.source = SourceDiag{gd.upsilon2, horizontal_source(gd)};
    b.generating = std::move(gd);
  } else if (family == "dmetric") {
    for (const char* k : {"g1", "g2", "h3", "h4"}) require_field(sc, k, params);
    b.metric.g1 = sc.field("g1", 0.0, params);
    b.metric.g2 = sc.field("g2", 0.0, params);
    b.metric.h3 = sc.field("h3", 0.0, params);
    b.metric.h4 = sc.field("h4", 0.0, params);
    b.metric.N = NConnection{sc.field("w1", 0.0, params), sc.field("w2", 0.0, params), sc.field("n1", 0.0, params),
                             sc.field("n2", 0.0, params)};
    b.ansatz = true;
    b.source = field_source(sc, params);
  } else {
    throw ConfigError("unknown family '" + family + "'");
  }
  if (sc.config.find("scenario", "eps") && family != "generator") b.metric.eps = parse_signs(sc.setting("eps"));
  if (b.ansatz) b.einstein_source = adapted_source_fn(b.metric, b.source);
  return b;
}

Report run_generate(const Scenario& sc) {
  Report rep;
  rep.command = "generate";
  const BuiltMetric b = prepared(sc);
  std::ostringstream os;
  const ResidualReport r = b.ansatz ? dconnection_section(sc, b, sc.diff) : einstein_section(sc, b, sc.diff);
  write_section(os, r);
  write_coefficients(os, b.metric, sc.grid);
  rep.pass = r.pass();
  rep.body = os.str();
  rep.metric = b.metric;
  return rep;
}

Report run_verify(const Scenario& sc) {
  Report rep;
  rep.command = "verify";
  const BuiltMetric b = prepared(sc);
  std::vector<std::string> sections =
      split_words(sc.setting("sections", b.ansatz ? "dconnection lc einstein" : "einstein"));
  std::ostringstream os;
  bool lc_ok = true;
  for (const std::string& s : sections) {
    if (s == "dconnection") {
      if (!b.ansatz) throw ConfigError("family " + sc.family + " has no d-connection section");
      const ResidualReport r = dconnection_section(sc, b, sc.diff);
      write_section(os, r);
      rep.pass = rep.pass && r.pass();
    } else if (s == "lc") {
      const ResidualReport r = lc_report(b.metric, b.source, sc.grid, sc.tolerance("lc", 1e-7), sc.diff);
      write_section(os, r);
      lc_ok = r.pass();
      rep.pass = rep.pass && lc_ok;
    } else if (s == "einstein") {
      if (!lc_ok) {
        os << "# section\teinstein\n# skipped\tLC constraints failed\n\n";
        continue;
      }
      const ResidualReport r = einstein_section(sc, b, sc.diff);
      write_section(os, r);
      rep.pass = rep.pass && r.pass();
    } else {
      throw ConfigError("unknown section '" + s + "'");
    }
  }
  rep.body = os.str();
  rep.metric = b.metric;
  return rep;
}

Report run_convergence(const Scenario& sc) {
  Report rep;
  rep.command = "convergence";
  std::vector<double> ns = sc.values("refinements");
  if (ns.empty()) ns = {9, 17, 33, 65};
  if (ns.size() < 3) throw ConfigError("convergence needs at least 3 refinements");
  for (double n : ns)
    if (n < 3 || n != std::floor(n)) throw ConfigError("refinements must be integers >= 3");
  const std::string mode = sc.setting("convergence", "residual");

  std::vector<double> hs, errs;
  if (mode == "residual") {
    const BuiltMetric b = prepared(sc);
    for (double n : ns) {
      const double h = (sc.grid.hi[0] - sc.grid.lo[0]) / (n - 1);
      DiffOptions opt = sc.diff;
      opt.step = h;
      const ResidualReport r = b.ansatz ? dconnection_section(sc, b, opt) : einstein_section(sc, b, opt);
      hs.push_back(h);
      errs.push_back(max_residual(r));
    }
  } else if (mode == "solve_psi") {
    const ScalarField exact = require_field(sc, "psi_exact", sc.params);
    const ScalarField u4 = sc.field("upsilon4", 0.0);
    const Signs eps = parse_signs(sc.setting("eps", "-1 -1 -1 1"));
    const RectDomain dom{sc.grid.lo[0], sc.grid.hi[0], sc.grid.lo[1], sc.grid.hi[1]};
    for (double nd : ns) {
      const int n = static_cast<int>(nd);
      const PsiSolution s = solve_psi(u4, dom, exact, eps[0], eps[1], n, n);
      double e = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          e = std::max(e, std::abs(s.values(i, j) - exact(Point(s.x1(i), s.x2(j), 0.0, 0.0))));
      hs.push_back((dom.x1_hi - dom.x1_lo) / (n - 1));
      errs.push_back(e);
    }
  } else {
    throw ConfigError("convergence mode must be 'residual' or 'solve_psi'");
  }

  const bool exact = mode == "residual" && sc.diff.backend == Backend::Dual;
  std::ostringstream os;
  os << "# section\tconvergence\n# mode\t" << mode << "\n# backend\t" << (exact ? "dual" : "fd") << '\n';
  os << "n\th\tmax_residual\torder\n";
  double order = NAN;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    os << static_cast<int>(ns[k]) << '\t' << fmt(hs[k]) << '\t' << fmt(errs[k]) << '\t';
    if (k == 0 || errs[k] <= 0.0 || errs[k - 1] <= 0.0) {
      os << "-\n";
      if (k > 0) order = NAN;
      continue;
    }
    order = std::log(errs[k - 1] / errs[k]) / std::log(hs[k - 1] / hs[k]);
    os << std::fixed << std::setprecision(4) << order << std::defaultfloat << '\n';
  }
  if (exact) {
    const double tol = sc.tolerance("convergence", 1e-7);
    rep.pass = std::all_of(errs.begin(), errs.end(), [&](double e) { return e <= tol; });
    os << "# criterion\tmax_residual <= " << fmt(tol) << "\t" << verdict(rep.pass) << '\n';
  } else {
    const double order_min = threshold(sc, "order_min", 1.9);
    rep.pass = std::isfinite(order) && order >= order_min;
    os << "# criterion\torder >= " << order_min << "\t" << verdict(rep.pass) << '\n';
  }
  rep.body = os.str();
  return rep;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("linear fit needs at least two points");
  const Eigen::Map<const Eigen::VectorXd> X(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::Map<const Eigen::VectorXd> Y(y.data(), static_cast<Eigen::Index>(y.size()));
  const double mx = X.mean(), my = Y.mean();
  const Eigen::VectorXd dx = X.array() - mx, dy = Y.array() - my;
  const double sxx = dx.squaredNorm(), syy = dy.squaredNorm(), sxy = dx.dot(dy);
  if (sxx == 0.0) throw ConfigError("linear fit needs distinct abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
  return f;
}

Report run_horizon(const Scenario& sc) {
  if (sc.family != "rotoid" && sc.family != "solitonic_rotoid") throw ConfigError("horizon needs the rotoid family");
  Report rep;
  rep.command = "horizon";
  const int samples = static_cast<int>(sc.param("samples", 64));
  if (samples < 4) throw ConfigError("horizon needs at least 4 samples");
  HorizonOptions ho;
  ho.vartheta = sc.param("vartheta", ho.vartheta);
  std::vector<double> sweep = sc.values("thetabar");
  if (sweep.empty()) sweep = {0.0};
  const double root_tol = sc.tolerance("horizon", 1e-9);

  std::ostringstream os;
  std::vector<double> ecc;
  double root_residual = 0.0;
  for (std::size_t s = 0; s < sweep.size(); ++s) {
    ParamMap p = sc.params;
    p["thetabar"] = sweep[s];
    const RotoidParams rp = rotoid_params(sc, p);
    const ScalarField b2 = rotoid_generating(rp).b2;
    if (s == 0) os << "# section\thorizon\n# thetabar\t" << fmt(sweep[s]) << "\nphi\tr_plus\n";
    for (int k = 0; k < samples; ++k) {
      const double phi = 2.0 * std::numbers::pi * k / samples;
      const double r = rotoid_horizon(phi, rp, ho);
      root_residual = std::max(root_residual, std::abs(b2(Point(r, ho.vartheta, phi, sc.grid.y4))));
      if (s == 0) os << fmt(phi, 10) << '\t' << fmt(r, 12) << '\n';
    }
    ecc.push_back(horizon_eccentricity(rp, 720, ho));
  }
  os << "\n# section\teccentricity\nthetabar\teccentricity\n";
  for (std::size_t s = 0; s < sweep.size(); ++s) os << fmt(sweep[s]) << '\t' << fmt(ecc[s], 12) << '\n';
  const bool root_ok = root_residual <= root_tol;
  os << "\n# section\tchecks\ncheck\tvalue\tlimit\tverdict\n";
  os << "root_residual\t" << fmt(root_residual) << '\t' << fmt(root_tol) << '\t' << verdict(root_ok) << '\n';
  rep.pass = root_ok;
  if (sweep.size() >= 2) {
    const LinearFit f = linear_fit(sweep, ecc);
    const double r2_min = threshold(sc, "r2_min", 0.999), b_max = threshold(sc, "intercept", 1e-6);
    const bool r2_ok = f.r2 >= r2_min, b_ok = std::abs(f.intercept) <= b_max;
    os << "fit_slope\t" << fmt(f.slope, 10) << "\t-\t-\n";
    os << "fit_r2\t" << fmt(f.r2, 10) << '\t' << fmt(r2_min) << '\t' << verdict(r2_ok) << '\n';
    os << "fit_intercept\t" << fmt(f.intercept) << '\t' << fmt(b_max) << '\t' << verdict(b_ok) << '\n';
    rep.pass = rep.pass && r2_ok && b_ok;
  }
  rep.body = os.str();
  return rep;
}

Report run_star(const Scenario& sc) {
  Report rep;
  rep.command = "star";
  static const char* names[6] = {"theta12", "theta13", "theta14", "theta23", "theta24", "theta34"};
  static const int idx[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  Eigen::Matrix4d dir = Eigen::Matrix4d::Zero();
  for (int k = 0; k < 6; ++k) {
    const double t = sc.param(names[k], k == 0 ? 1.0 : 0.0);
    dir(idx[k][0], idx[k][1]) = t;
    dir(idx[k][1], idx[k][0]) = -t;
  }
  std::vector<double> sweep = sc.values("theta");
  if (sweep.empty()) sweep = {0.1};
  ThetaTensor theta = ThetaTensor::from_components(dir);
  theta.scale = 0.0;
  for (double t : sweep) theta.scale = std::max(theta.scale, std::abs(t));

  const ScalarField f = require_field(sc, "f", sc.params), g = require_field(sc, "g", sc.params);
  const NConnection N{sc.field("w1", 0.0), sc.field("w2", 0.0), sc.field("n1", 0.0), sc.field("n2", 0.0)};
  const SeriesField F{ComplexField(f), ComplexField(0.0), ComplexField(0.0)};
  const SeriesField Gs{ComplexField(g), ComplexField(0.0), ComplexField(0.0)};
  const SeriesField fg = star_field(F, Gs, theta, N), gf = star_field(Gs, F, theta, N);
  std::optional<std::pair<SeriesField, SeriesField>> assoc;
  if (sc.has_field("h")) {
    const SeriesField H{ComplexField(sc.field("h", 0.0)), ComplexField(0.0), ComplexField(0.0)};
    assoc.emplace(star_field(fg, H, theta, N), star_field(F, star_field(Gs, H, theta, N), theta, N));
  }

  const double tol = sc.tolerance("star", 1e-10);
  ResidualAccumulator order0("order0_product"), comm("commutator_order1"), asso("associativity");
  for (int i = 0; i < sc.grid.n[0]; ++i)
    for (int j = 0; j < sc.grid.n[1]; ++j)
      for (int k = 0; k < sc.grid.n[2]; ++k) {
        const Point p = sc.grid.point(i, j, k);
        const Series s = evaluate(fg, p), r = evaluate(gf, p);
        order0.add(std::abs(s.c[0] - f(p) * g(p)), p);
        std::complex<double> expect = 0.0;
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b)
            if (dir(a, b) != 0.0) expect += std::complex<double>(0.0, dir(a, b)) * n_elongated(f, N, p, a) *
                                             n_elongated(g, N, p, b);
        comm.add(std::abs(s.c[1] - r.c[1] - expect), p);
        if (assoc) {
          const Series d = evaluate(assoc->first, p) - evaluate(assoc->second, p);
          double def = 0.0;
          for (int q = 0; q <= Series::kOrder; ++q) def += std::abs(d.c[q]) * std::pow(theta.scale, q);
          asso.add(def, p);
        }
      }
  std::vector<EquationResidual> rows{order0.finish(tol), comm.finish(tol)};
  if (assoc) rows.push_back(asso.finish(tol));
  std::ostringstream os;
  write_rows(os, "star", sc.grid.describe(), rows);
  for (const auto& r : rows) rep.pass = rep.pass && r.pass();

  os << "# section\tproducts\nx1\tx2\tv\ty4\ttheta\tre\tim\tcommutator_re\tcommutator_im\n";
  const auto flags = os.flags();
  os << std::setprecision(10) << std::scientific;
  for (const Point& p : diagonal_samples(sc.grid)) {
    const Series s = evaluate(fg, p), r = evaluate(gf, p);
    for (double t : sweep) {
      const std::complex<double> a = s.value(t), c = a - r.value(t);
      for (int q = 0; q < 4; ++q) os << p[q] << '\t';
      os << t << '\t' << a.real() << '\t' << a.imag() << '\t' << c.real() << '\t' << c.imag() << '\n';
    }
  }
  os.flags(flags);
  rep.body = os.str();
  return rep;
}

Report run_finsler(const Scenario& sc) {
  Report rep;
  rep.command = "finsler";
  const FinslerFunction F(require_field(sc, "F", sc.params));
  const BuiltMetric b = build_family(sc, sc.setting("source", "schwarzschild"), sc.params);
  TransformOptions opt;
  opt.theta_tol = sc.tolerance("theta_compat", 1e-8);
  auto signs = [&](const char* key) {
    std::array<int, 4> s{1, 1, 1, 1};
    if (sc.config.find("scenario", key)) {
      const Signs p = parse_signs(sc.setting(key));
      std::copy(p.begin(), p.end(), s.begin());
    }
    return s;
  };
  opt.offdiag_signs = signs("offdiag_signs");
  opt.diag_signs = signs("diag_signs");

  const double tol = sc.tolerance("finsler", 1e-10);
  ResidualAccumulator step1("step1_n"), step3("step3_theta"), step4("step4_vielbein"), scal("scaling"),
      euler("euler");
  std::vector<std::pair<Point, TransformError>> failures;
  std::size_t failed = 0;
  for (int i = 0; i < sc.grid.n[0]; ++i)
    for (int j = 0; j < sc.grid.n[1]; ++j)
      for (int k = 0; k < sc.grid.n[2]; ++k) {
        const Point p = sc.grid.point(i, j, k);
        try {
          const TransformState st = riemann_to_finsler(b.metric, F, p, opt);
          step1.add(st.n_residual, p);
          step3.add(st.theta_residual, p);
          step4.add(st.vielbein_residual, p);
          scal.add(st.scaling_residual, p);
          euler.add(euler_defect(F, p), p);
        } catch (const TransformError& e) {
          ++failed;
          if (failures.size() < 10) failures.emplace_back(p, e);
        }
      }
  std::vector<EquationResidual> rows{step1.finish(tol), step3.finish(opt.theta_tol), step4.finish(tol),
                                     scal.finish(tol), euler.finish(sc.tolerance("euler", 1e-8))};
  std::ostringstream os;
  write_rows(os, "finsler", sc.grid.describe(), rows);
  for (const auto& r : rows) rep.pass = rep.pass && (r.samples == 0 || r.pass());

  os << "# section\ttransform\nx1\tx2\tv\ty4\tTheta\tE_v_x1\tE_y4_x2\tE_x1_v\tE_x2_y4\tsign_product\n";
  const auto flags = os.flags();
  os << std::setprecision(10) << std::scientific;
  for (const Point& p : diagonal_samples(sc.grid)) {
    try {
      const TransformState st = riemann_to_finsler(b.metric, F, p, opt);
      for (int q = 0; q < 4; ++q) os << p[q] << '\t';
      os << st.theta.theta << '\t' << st.E(2, 0) << '\t' << st.E(3, 1) << '\t' << st.E(0, 2) << '\t' << st.E(1, 3)
         << '\t' << st.sign_product << '\n';
    } catch (const TransformError&) {
    }
  }
  os.flags(flags);
  if (failed) {
    rep.pass = false;
    os << "\n# section\tfailures\n# count\t" << failed << "\nx1\tx2\tv\ty4\tstep\tdefect\tmessage\n";
    for (const auto& [p, e] : failures) {
      for (int q = 0; q < 4; ++q) os << fmt(p[q]) << '\t';
      os << e.step() << '\t' << fmt(e.defect()) << '\t' << e.what() << '\n';
    }
  }
  rep.body = os.str();
  return rep;
}

Report run_command(const std::string& command, const Scenario& sc) {
  if (command == "generate") return run_generate(sc);
  if (command == "verify") return run_verify(sc);
  if (command == "convergence") return run_convergence(sc);
  if (command == "horizon") return run_horizon(sc);
  if (command == "star") return run_star(sc);
  if (command == "finsler") return run_finsler(sc);
  throw ConfigError("unknown command '" + command + "'");
}

std::string scenario_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

void write_report(std::ostream& os, const Report& r, const Scenario& sc, bool timestamp) {
  os << "# nholo " << NHOLO_VERSION << '\n';
  os << "# command\t" << r.command << '\n';
  os << "# scenario\t" << sc.name << '\n';
  os << "# scenario_file\t" << sc.path << '\n';
  os << "# scenario_hash\tfnv1a64:" << scenario_hash(sc.config.text()) << '\n';
  os << "# family\t" << sc.family << '\n';
  os << "# backend\t" << (sc.diff.backend == Backend::Dual ? "dual" : "fd") << '\n';
  if (sc.tol_override) os << "# tol_override\t" << fmt(*sc.tol_override) << '\n';
  if (timestamp) {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    os << "# generated\t" << buf << '\n';
  }
  os << '\n' << r.body;
  os << "# verdict\t" << verdict(r.pass) << '\n';
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ConfigError*>(&e) ||
      dynamic_cast<const SingularChart*>(&e) || dynamic_cast<const ChartViolation*>(&e) ||
      dynamic_cast<const NonMonotoneMap*>(&e) || dynamic_cast<const AnalyticPsiRequired*>(&e))
    return kExitConfig;
  return kExitNumeric;
}

}  // namespace nholo
