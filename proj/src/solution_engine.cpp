#include "nholo/solution_engine.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "nholo/spline.hpp"

namespace nholo {

namespace {

constexpr MultiIndex D1{1, 0, 0, 0}, D2{0, 1, 0, 0}, DV{0, 0, 1, 0};
constexpr MultiIndex D11{2, 0, 0, 0}, D22{0, 2, 0, 0}, DVV{0, 0, 2, 0};
constexpr MultiIndex D1V{1, 0, 1, 0}, D2V{0, 1, 1, 0};

ScalarField sign_of(const ScalarField& s) {
  if (auto c = s.constant_value()) return ScalarField(*c > 0 ? 1.0 : -1.0);
  return s / abs(s);
}

}  // namespace

// ---------------------------------------------------------------------------
// Generator

ScalarField effective_h0(const GeneratingData& gd) { return gd.lc_mode ? ScalarField(2.0) : gd.h0; }

ScalarField varsigma_field(const GeneratingData& gd) {
  if (gd.upsilon2.is_zero()) return gd.varsigma0;
  const ScalarField h0 = effective_h0(gd);
  const ScalarField df = derivative(gd.f, V);
  ScalarField integral;
  if (!gd.upsilon2.depends_on(V)) {
    // int Y2 f* (f - f0) dv = Y2 [(f - f0)^2 - (f(v0) - f0)^2] / 2 for v-independent Y2
    const ScalarField F = gd.f - gd.f0;
    const ScalarField F0 = gd.f.substitute(V, ScalarField(gd.v0)) - gd.f0;
    integral = gd.upsilon2 * (F * F - F0 * F0) * 0.5;
  } else {
    integral = integral_v(gd.upsilon2 * df * (gd.f - gd.f0), gd.v0, gd.breakpoint_step);
  }
  // (1/s)* = 2 sign(s) eps3 h0^2 Y2 f* (f - f0) keeps the vertical residual exact
  const double e3 = gd.eps[2];
  return 1.0 / (1.0 / gd.varsigma0 + 2.0 * e3 * sign_of(gd.varsigma0) * h0 * h0 * integral);
}

std::pair<ScalarField, ScalarField> w_fields(const GeneratingData& gd) {
  if (gd.lc_mode) {
    const ScalarField F = gd.f - gd.f0;
    const ScalarField Fv = derivative(F, V);
    return {derivative(F, X1) / Fv, derivative(F, X2) / Fv};
  }
  if (gd.upsilon2.is_zero()) return {gd.w1_free, gd.w2_free};
  const ScalarField s = varsigma_field(gd);
  const ScalarField h0 = effective_h0(gd);
  const ScalarField sv = derivative(s, V);
  auto w = [&](int i) { return -(derivative(s, i) + 2.0 * s * derivative(h0, i) / h0) / sv; };
  return {w(X1), w(X2)};
}

std::pair<ScalarField, ScalarField> n_fields(const GeneratingData& gd) {
  if (gd.n2_1.is_zero() && gd.n2_2.is_zero()) return {gd.n1_1, gd.n1_2};
  const ScalarField F = gd.f - gd.f0;
  const ScalarField df = derivative(gd.f, V);
  const ScalarField I = integral_v(df * df * varsigma_field(gd) / (F * F * F), gd.v0, gd.breakpoint_step);
  return {gd.n1_1 + gd.n2_1 * I, gd.n1_2 + gd.n2_2 * I};
}

DMetric build_solution(const GeneratingData& gd) {
  const ScalarField h0 = effective_h0(gd);
  const ScalarField df = derivative(gd.f, V);
  const ScalarField F = gd.f - gd.f0;
  const ScalarField e_psi = exp(gd.psi);
  DMetric d;
  d.eps = gd.eps;
  d.g1 = gd.eps[0] * e_psi;
  d.g2 = gd.eps[1] * e_psi;
  d.h3 = gd.eps[2] * h0 * h0 * df * df * abs(varsigma_field(gd));
  d.h4 = gd.eps[3] * F * F;
  auto [w1, w2] = w_fields(gd);
  auto [n1, n2] = n_fields(gd);
  d.N = NConnection{w1, w2, n1, n2};
  return d;
}

ScalarField horizontal_source(const GeneratingData& gd) { return 0.5 * exp(-gd.psi) * gd.upsilon4; }

double varsigma(const GeneratingData& gd, const Point& p) { return varsigma_field(gd)(p); }

std::pair<double, double> w_coefficients(const GeneratingData& gd, const Point& p) {
  if (!gd.lc_mode && !gd.upsilon2.is_zero()) {
    Evaluator e(p);
    const Jet<1> s = e.jet<1>(varsigma_field(gd));
    if (std::abs(s.derivative(DV)) <= 1e-14 * std::max(1.0, std::abs(s.value())))
      throw ZeroDenominator("varsigma* vanishes where w_i = -d_i varsigma / varsigma* is needed");
  }
  auto [w1, w2] = w_fields(gd);
  Evaluator e(p);
  return {e.value(w1), e.value(w2)};
}

std::pair<double, double> n_coefficients(const GeneratingData& gd, const Point& p) {
  if (!(gd.n2_1.is_zero() && gd.n2_2.is_zero())) {
    const ScalarField F = gd.f - gd.f0;
    const int samples = 64;
    double first = 0.0;
    for (int s = 0; s <= samples; ++s) {
      Point q = p;
      q[V] = gd.v0 + (p[V] - gd.v0) * s / samples;
      const double val = F(q);
      if (s == 0) first = val;
      if (std::abs(val) < 1e-12 || val * first <= 0.0)
        throw PoleOnPath("f - f0 vanishes on the integration path near v = " + std::to_string(q[V]));
    }
  }
  auto [n1, n2] = n_fields(gd);
  Evaluator e(p);
  return {e.value(n1), e.value(n2)};
}

// ---------------------------------------------------------------------------
// Residuals

namespace {

double residual_h_impl(JetSource& src, const DMetric& d, const ScalarField& u4) {
  const Jet<2> g1 = src.jet<2>(d.g1), g2 = src.jet<2>(d.g2);
  const double a = g1.value(), b = g2.value();
  if (a == 0.0 || b == 0.0) throw ZeroDenominator("horizontal metric coefficient vanishes");
  const double a1 = g1.derivative(D1), a2 = g1.derivative(D2), a22 = g1.derivative(D22);
  const double b1 = g2.derivative(D1), b2 = g2.derivative(D2), b11 = g2.derivative(D11);
  const double bracket =
      a1 * b1 / (2 * a) + b1 * b1 / (2 * b) - b11 + a2 * b2 / (2 * b) + a2 * a2 / (2 * a) - a22;
  return bracket / (2 * a * b) + src.value(u4);
}

double residual_v_impl(JetSource& src, const DMetric& d, const ScalarField& u2) {
  const Jet<1> h3 = src.jet<1>(d.h3);
  const Jet<2> h4 = src.jet<2>(d.h4);
  const double a = h3.value(), b = h4.value();
  if (a == 0.0 || b == 0.0) throw ZeroDenominator("vertical metric coefficient vanishes");
  const double dlog = 0.5 * (h3.derivative(DV) / a + h4.derivative(DV) / b);
  return (h4.derivative(DV) * dlog - h4.derivative(DVV)) / (2 * a * b) + src.value(u2);
}

std::pair<double, double> residual_w_impl(JetSource& src, const DMetric& d) {
  const Jet<1> h3 = src.jet<1>(d.h3);
  const Jet<2> h4 = src.jet<2>(d.h4);
  const double a = h3.value(), b = h4.value();
  if (a * b == 0.0) throw DegenerateVertical("phi is undefined where h3 h4 = 0");
  // alpha_i = h4* d_i phi and beta = h4* phi* in the form regular at h4* = 0
  auto dlog = [&](const MultiIndex& e) { return 0.5 * (h3.derivative(e) / a + h4.derivative(e) / b); };
  const double h4v = h4.derivative(DV);
  const double beta = h4.derivative(DVV) - h4v * dlog(DV);
  const double alpha1 = h4.derivative(D1V) - h4v * dlog(D1);
  const double alpha2 = h4.derivative(D2V) - h4v * dlog(D2);
  const double w1 = src.value(d.N.w1), w2 = src.value(d.N.w2);
  return {(-w1 * beta - alpha1) / (2 * b), (-w2 * beta - alpha2) / (2 * b)};
}

struct VerticalDerivs {
  ScalarField n1v, n2v;
  explicit VerticalDerivs(const DMetric& d) : n1v(derivative(d.N.n1, V)), n2v(derivative(d.N.n2, V)) {}
};

std::pair<double, double> residual_n_impl(JetSource& src, const DMetric& d, const VerticalDerivs& nv) {
  const Jet<1> h3 = src.jet<1>(d.h3), h4 = src.jet<1>(d.h4);
  const double a = h3.value(), b = h4.value();
  if (a == 0.0 || b == 0.0) throw ZeroDenominator("vertical metric coefficient vanishes");
  const double gamma = 1.5 * h4.derivative(DV) / b - h3.derivative(DV) / a;
  auto one = [&](const ScalarField& n1) {
    if (n1.is_zero()) return 0.0;
    const Jet<1> j = src.jet<1>(n1);
    return -(a / (2 * b)) * (j.derivative(DV) + gamma * j.value());
  };
  return {one(nv.n1v), one(nv.n2v)};
}

std::array<double, 4> lc_impl(JetSource& src, const DMetric& d, const ScalarField& u2, const ScalarField& u4) {
  std::array<double, 4> r{};
  {
    const Jet<2> g1 = src.jet<2>(d.g1);
    const Jet<2> psi = log(abs(g1));
    r[0] = d.eps[0] * psi.derivative(D11) + d.eps[1] * psi.derivative(D22) - src.value(u4);
  }
  {
    const Jet<1> h3 = src.jet<1>(d.h3);
    const Jet<2> h4 = src.jet<2>(d.h4);
    const double a = h3.value(), b = h4.value(), h4v = h4.derivative(DV);
    if (h4v == 0.0 || a * b == 0.0) throw DegenerateVertical("phi is undefined where h4* = 0 or h3 h4 = 0");
    const double phi = std::log(std::abs(h4v / std::sqrt(std::abs(a * b))));
    r[1] = h4v * phi / (a * b) - src.value(u2);
  }
  {
    const Jet<1> w1 = src.jet<1>(d.N.w1), w2 = src.jet<1>(d.N.w2);
    // N-curvature e_2(w_1) - e_1(w_2)
    r[2] = w1.derivative(D2) - w2.derivative(D1) - w2.value() * w1.derivative(DV) +
           w1.value() * w2.derivative(DV);
  }
  {
    const Jet<1> n1 = src.jet<1>(d.N.n1), n2 = src.jet<1>(d.N.n2);
    r[3] = n1.derivative(D2) - n2.derivative(D1);
  }
  return r;
}

}  // namespace

double residual_h(const DMetric& d, const ScalarField& upsilon4, const Point& p, const DiffOptions& opt) {
  JetSource src(p, opt);
  return residual_h_impl(src, d, upsilon4);
}

double residual_v(const DMetric& d, const ScalarField& upsilon2, const Point& p, const DiffOptions& opt) {
  JetSource src(p, opt);
  return residual_v_impl(src, d, upsilon2);
}

std::pair<double, double> residual_w(const DMetric& d, const Point& p, const DiffOptions& opt) {
  JetSource src(p, opt);
  return residual_w_impl(src, d);
}

std::pair<double, double> residual_n(const DMetric& d, const Point& p, const DiffOptions& opt) {
  JetSource src(p, opt);
  return residual_n_impl(src, d, VerticalDerivs(d));
}

ScalarField vertical_phi(const DMetric& d) {
  return log(abs(derivative(d.h4, V) / sqrt(abs(d.h3 * d.h4))));
}

std::array<double, 4> lc_constraints(const DMetric& d, const ScalarField& upsilon2, const ScalarField& upsilon4,
                                     const Point& p, const DiffOptions& opt) {
  JetSource src(p, opt);
  return lc_impl(src, d, upsilon2, upsilon4);
}

DMetric lc_project_w(const DMetric& d, const ScalarField& potential) {
  DMetric r = d;
  const ScalarField pv = derivative(potential, V);
  if (pv.is_zero()) throw ZeroDenominator("projection potential does not depend on v");
  r.N.w1 = derivative(potential, X1) / pv;
  r.N.w2 = derivative(potential, X2) / pv;
  return r;
}

// ---------------------------------------------------------------------------
// Horizontal solver

PsiSolution solve_psi(const ScalarField& upsilon4, const RectDomain& dom, const ScalarField& boundary, int eps1,
                      int eps2, int n1, int n2) {
  if (eps1 != eps2)
    throw AnalyticPsiRequired("eps1 != eps2 gives a hyperbolic equation; supply psi analytically");
  if (n1 < 3 || n2 < 3) throw std::invalid_argument("solve_psi needs at least 3 nodes per axis");
  const double h1 = (dom.x1_hi - dom.x1_lo) / (n1 - 1);
  const double h2 = (dom.x2_hi - dom.x2_lo) / (n2 - 1);
  PsiSolution sol;
  sol.domain = dom;
  sol.values = Eigen::MatrixXd::Zero(n1, n2);
  auto node = [&](int i, int j) { return Point(dom.x1_lo + i * h1, dom.x2_lo + j * h2, 0.0, 0.0); };
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j)
      if (i == 0 || j == 0 || i == n1 - 1 || j == n2 - 1) sol.values(i, j) = boundary(node(i, j));

  // -(psi_11 + psi_22) = -eps1 Y4 on interior unknowns (symmetric positive definite)
  const int m1 = n1 - 2, m2 = n2 - 2;
  auto id = [&](int i, int j) { return (i - 1) * m2 + (j - 1); };
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs(m1 * m2);
  const double c1 = 1.0 / (h1 * h1), c2 = 1.0 / (h2 * h2);
  for (int i = 1; i <= m1; ++i)
    for (int j = 1; j <= m2; ++j) {
      const int r = id(i, j);
      double b = -eps1 * upsilon4(node(i, j));
      trip.emplace_back(r, r, 2 * c1 + 2 * c2);
      const int ni[4] = {i - 1, i + 1, i, i};
      const int nj[4] = {j, j, j - 1, j + 1};
      const double w[4] = {c1, c1, c2, c2};
      for (int q = 0; q < 4; ++q) {
        if (ni[q] == 0 || nj[q] == 0 || ni[q] == n1 - 1 || nj[q] == n2 - 1)
          b += w[q] * sol.values(ni[q], nj[q]);
        else
          trip.emplace_back(r, id(ni[q], nj[q]), -w[q]);
      }
      rhs[r] = b;
    }
  Eigen::SparseMatrix<double> A(m1 * m2, m1 * m2);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
  if (solver.info() != Eigen::Success) throw NonConvergent("Laplacian factorization failed");
  const Eigen::VectorXd x = solver.solve(rhs);
  for (int i = 1; i <= m1; ++i)
    for (int j = 1; j <= m2; ++j) sol.values(i, j) = x[id(i, j)];

  double res = 0.0;
  for (int i = 1; i <= m1; ++i)
    for (int j = 1; j <= m2; ++j) {
      const auto& u = sol.values;
      const double lap1 = (u(i + 1, j) - 2 * u(i, j) + u(i - 1, j)) * c1;
      const double lap2 = (u(i, j + 1) - 2 * u(i, j) + u(i, j - 1)) * c2;
      res = std::max(res, std::abs(eps1 * lap1 + eps2 * lap2 - upsilon4(node(i, j))));
    }
  sol.residual = res;
  sol.psi = bicubic_spline_field(sol.values, dom.x1_lo, dom.x1_hi, dom.x2_lo, dom.x2_hi);
  return sol;
}

// ---------------------------------------------------------------------------
// Reports

std::string Grid::describe() const {
  std::ostringstream os;
  os << n[0] << 'x' << n[1] << 'x' << n[2] << " x1[" << lo[0] << ',' << hi[0] << "] x2[" << lo[1] << ','
     << hi[1] << "] v[" << lo[2] << ',' << hi[2] << "] y4=" << y4;
  return os.str();
}

void ResidualAccumulator::add(double value, const Point& p) {
  const double a = std::abs(value);
  if (!(a <= r_.max_abs) || r_.samples == 0) {
    if (!(a <= r_.max_abs)) {
      r_.max_abs = std::isnan(a) ? INFINITY : a;
      r_.argmax = p;
    }
  }
  sum_ += a;
  ++r_.samples;
}

EquationResidual ResidualAccumulator::finish(double tol) const {
  EquationResidual r = r_;
  r.tol = tol;
  r.mean_abs = r.samples ? sum_ / static_cast<double>(r.samples) : 0.0;
  if (r.mean_abs > r.max_abs) r.mean_abs = r.max_abs;
  return r;
}

bool ResidualReport::pass() const {
  for (const auto& r : rows)
    if (!r.pass()) return false;
  return true;
}

void ResidualReport::write_tsv(std::ostream& os) const {
  os << "# section\t" << section << '\n';
  os << "# grid\t" << grid << '\n';
  os << "equation\tmax_abs\tmean_abs\targmax_x1\targmax_x2\targmax_v\targmax_y4\ttol\tverdict\n";
  const auto flags = os.flags();
  os << std::setprecision(6) << std::scientific;
  for (const auto& r : rows) {
    os << r.id << '\t' << r.max_abs << '\t' << r.mean_abs;
    for (int q = 0; q < 4; ++q) os << '\t' << r.argmax[q];
    os << '\t' << r.tol << '\t' << (r.pass() ? "PASS" : "FAIL") << '\n';
  }
  os.flags(flags);
}

namespace {

void collect_abs_args(const NodePtr& n, std::unordered_set<const Node*>& seen, std::vector<ScalarField>& out) {
  if (!n || !seen.insert(n.get()).second) return;
  if (n->op == Op::Abs) out.emplace_back(n->a);
  collect_abs_args(n->a, seen, out);
  collect_abs_args(n->b, seen, out);
}

template <typename Fn>
void for_each_point(const Grid& g, Fn&& fn) {
  for (int i = 0; i < g.n[0]; ++i)
    for (int j = 0; j < g.n[1]; ++j)
      for (int k = 0; k < g.n[2]; ++k) fn(g.point(i, j, k));
}

// Requires a strictly one-signed field over the grid.
void require_sign(const ScalarField& f, const Grid& g, const std::string& what, int expected = 0) {
  int sign = expected;
  for_each_point(g, [&](const Point& p) {
    const double x = f(p);
    const int s = x > 0 ? 1 : (x < 0 ? -1 : 0);
    if (s == 0 || !std::isfinite(x)) {
      std::ostringstream os;
      os << what << " vanishes at (" << p.transpose() << ")";
      throw SingularChart(os.str());
    }
    if (sign == 0) sign = s;
    if (s != sign) {
      std::ostringstream os;
      os << what << " changes sign at (" << p.transpose() << ")";
      throw SingularChart(os.str());
    }
  });
}

void scan_abs(const std::vector<ScalarField>& fields, const Grid& g) {
  std::unordered_set<const Node*> seen;
  std::vector<ScalarField> args;
  for (const auto& f : fields) collect_abs_args(f.node(), seen, args);
  for (const auto& a : args) require_sign(a, g, "argument of |.| (" + a.to_string() + ")");
}

}  // namespace

void validate_chart(const GeneratingData& gd, const Grid& grid) {
  if (grid.n[0] < 2 || grid.n[1] < 2 || grid.n[2] < 2) throw ConfigError("grid needs at least 2 nodes per axis");
  scan_abs({gd.psi, gd.f, gd.f0, gd.h0, gd.varsigma0, gd.n1_1, gd.n1_2, gd.n2_1, gd.n2_2, gd.upsilon2, gd.upsilon4,
            gd.w1_free, gd.w2_free},
           grid);
  require_sign(gd.f - gd.f0, grid, "f - f0");
  require_sign(derivative(gd.f, V), grid, "f*");
  require_sign(effective_h0(gd), grid, "h0");
  if (gd.upsilon2.is_zero()) {
    // vacuum phi = ln(2 / (h0 sqrt|s0|)) must not depend on x for free w to solve the w equations
    const ScalarField c = effective_h0(gd) * effective_h0(gd) * gd.varsigma0;
    if (c.depends_on(X1) || c.depends_on(X2))
      throw ConfigError("vacuum data needs h0^2 varsigma0 independent of x1, x2");
  }
  const ScalarField s = varsigma_field(gd);
  require_sign(s, grid, "varsigma");
  if (!gd.lc_mode && !gd.upsilon2.is_zero()) require_sign(derivative(s, V), grid, "varsigma*");
  const DMetric d = build_solution(gd);
  scan_abs({d.g1, d.g2, d.h3, d.h4, d.N.w1, d.N.w2, d.N.n1, d.N.n2}, grid);
}

void validate_signs(const DMetric& d, const Grid& grid) {
  scan_abs({d.g1, d.g2, d.h3, d.h4, d.N.w1, d.N.w2, d.N.n1, d.N.n2}, grid);
  static const char* names[] = {"g1", "g2", "h3", "h4"};
  for (int a = 0; a < 4; ++a) require_sign(d.coefficient(a), grid, names[a], d.eps[a]);
}

ResidualReport dconnection_report(const DMetric& d, const SourceDiag& src, const Grid& grid, double tol,
                                  const DiffOptions& opt, bool include_h) {
  ResidualAccumulator h("horizontal"), v("vertical"), w1("w1"), w2("w2"), n1("n1"), n2("n2");
  const VerticalDerivs nv(d);
  for_each_point(grid, [&](const Point& p) {
    JetSource s(p, opt);
    if (include_h) h.add(residual_h_impl(s, d, src.upsilon4), p);
    v.add(residual_v_impl(s, d, src.upsilon2), p);
    auto [a, b] = residual_w_impl(s, d);
    w1.add(a, p);
    w2.add(b, p);
    auto [c, e] = residual_n_impl(s, d, nv);
    n1.add(c, p);
    n2.add(e, p);
  });
  ResidualReport r;
  r.section = "d-connection";
  r.grid = grid.describe();
  if (include_h) r.rows.push_back(h.finish(tol));
  for (auto* acc : {&v, &w1, &w2, &n1, &n2}) r.rows.push_back(acc->finish(tol));
  return r;
}

ResidualReport lc_report(const DMetric& d, const SourceDiag& src, const Grid& grid, double tol,
                         const DiffOptions& opt) {
  ResidualAccumulator acc[4] = {ResidualAccumulator("lc_psi"), ResidualAccumulator("lc_phi"),
                                ResidualAccumulator("lc_w"), ResidualAccumulator("lc_n")};
  for_each_point(grid, [&](const Point& p) {
    JetSource s(p, opt);
    const auto r = lc_impl(s, d, src.upsilon2, src.upsilon4);
    for (int q = 0; q < 4; ++q) acc[q].add(r[q], p);
  });
  ResidualReport r;
  r.section = "levi-civita constraints";
  r.grid = grid.describe();
  for (auto& a : acc) r.rows.push_back(a.finish(tol));
  return r;
}

ResidualReport einstein_report(const CoordinateMetric& g, const Grid& grid, double tol,
                               const std::function<Eigen::Matrix4d(const Point&)>& source,
                               const DiffOptions& opt) {
  ResidualAccumulator acc("einstein");
  for_each_point(grid, [&](const Point& p) {
    Eigen::Matrix4d E = lc_einstein(g, p, opt);
    if (source) E -= source(p);
    acc.add(E.cwiseAbs().maxCoeff(), p);
  });
  ResidualReport r;
  r.section = "einstein";
  r.grid = grid.describe();
  r.rows.push_back(acc.finish(tol));
  return r;
}

}  // namespace nholo
