#include "nholo/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "nholo/errors.hpp"
#include "nholo/quadrature.hpp"

namespace nholo {

namespace {

const ScalarField x1 = ScalarField::coordinate(X1);
const ScalarField x2 = ScalarField::coordinate(X2);
const ScalarField v = ScalarField::coordinate(V);

constexpr double kPi = std::numbers::pi;

// Truncated univariate power series.
using Series = std::vector<double>;

Series mul(const Series& a, const Series& b) {
  Series r(a.size(), 0.0);
  for (std::size_t k = 0; k < r.size(); ++k)
    for (std::size_t j = 0; j <= k; ++j) r[k] += a[j] * b[k - j];
  return r;
}

Series inv(const Series& a) {
  Series r(a.size(), 0.0);
  r[0] = 1.0 / a[0];
  for (std::size_t k = 1; k < r.size(); ++k) {
    double s = 0.0;
    for (std::size_t j = 1; j <= k; ++j) s += a[j] * r[k - j];
    r[k] = -s / a[0];
  }
  return r;
}

Series sqrt_series(const Series& a) {
  Series r(a.size(), 0.0);
  r[0] = std::sqrt(a[0]);
  for (std::size_t k = 1; k < r.size(); ++k) {
    double s = a[k];
    for (std::size_t j = 1; j < k; ++j) s -= r[j] * r[k - j];
    r[k] = s / (2.0 * r[0]);
  }
  return r;
}

QuadratureOptions tight() {
  QuadratureOptions q;
  q.rel_tol = 1e-14;
  q.abs_tol = 1e-16;
  return q;
}

}  // namespace

// ---------------------------------------------------------------------------
// Schwarzschild

void check_schwarzschild_chart(const SchwarzschildParams& p, double r) {
  if (!(p.alpha() > 0.0)) throw ConfigError("Schwarzschild radius must be positive");
  if (!(r > p.alpha())) {
    std::ostringstream os;
    os << "r = " << r << " is not outside the Schwarzschild radius " << p.alpha();
    throw ChartViolation(os.str());
  }
}

DMetric schwarzschild_prime(const SchwarzschildParams& p) {
  if (!(p.alpha() > 0.0)) throw ConfigError("Schwarzschild radius must be positive");
  const ScalarField h4 = 1.0 - p.alpha() / x1;
  DMetric d;
  d.g1 = -1.0 / h4;
  d.g2 = -(x1 * x1);
  d.h3 = -(x1 * x1) * pow(sin(x2), 2.0);
  d.h4 = h4;
  return d;
}

RadialMap::RadialMap(double mu0, double theta, double r_min, double r_max, int table_size)
    : mu0_(mu0), theta_(theta) {
  if (!(r_max > r_min) || table_size < 2) throw ConfigError("radial table needs r_max > r_min");
  r_.resize(table_size);
  xi_.resize(table_size);
  for (int j = 0; j < table_size; ++j) {
    r_[j] = r_min + (r_max - r_min) * j / (table_size - 1);
    if (!(varpi2(r_[j]) > 0.0)) {
      std::ostringstream os;
      os << "varpi^2 <= 0 at r = " << r_[j] << ": xi(r) is not monotone on the chart";
      throw NonMonotoneMap(os.str());
    }
  }
  auto integrand = [&](double r) {
    const double w = varpi2(r);
    if (!(w > 0.0)) throw NonMonotoneMap("varpi^2 <= 0 inside the radial table");
    return 1.0 / std::sqrt(w);
  };
  xi_[0] = r_min;
  for (int j = 1; j < table_size; ++j)
    xi_[j] = xi_[j - 1] + adaptive_quadrature<double>(integrand, r_[j - 1], r_[j], tight());
}

double RadialMap::xi_of_r(double r) const {
  const double h = r_[1] - r_[0];
  const int n = static_cast<int>(r_.size());
  const int j = std::clamp(static_cast<int>(std::lround((r - r_[0]) / h)), 0, n - 1);
  auto integrand = [&](double s) {
    const double w = varpi2(s);
    if (!(w > 0.0)) throw NonMonotoneMap("varpi^2 <= 0 on the radial path");
    return 1.0 / std::sqrt(w);
  };
  return xi_[j] + adaptive_quadrature<double>(integrand, r_[j], r, tight());
}

double RadialMap::r_of_xi(double xi) const {
  const auto it = std::upper_bound(xi_.begin(), xi_.end(), xi);
  const int n = static_cast<int>(xi_.size());
  const int k = std::clamp(static_cast<int>(it - xi_.begin()) - 1, 0, n - 2);
  const double t = (xi - xi_[k]) / (xi_[k + 1] - xi_[k]);
  double r = r_[k] + t * (r_[k + 1] - r_[k]);
  for (int it_count = 0; it_count < 60; ++it_count) {
    const double w = varpi2(r);
    if (!(w > 0.0)) throw NonMonotoneMap("Newton step for r(xi) left the chart");
    const double dr = (xi_of_r(r) - xi) * std::sqrt(w);
    r -= dr;
    if (std::abs(dr) <= 1e-15 * std::max(1.0, std::abs(r))) return r;
  }
  throw NonConvergent("r(xi) Newton iteration did not converge");
}

void RadialMap::taylor(double xi, int order, double* out) const {
  Series c(order + 1, 0.0);
  c[0] = r_of_xi(xi);
  // c_{k+1} = [sqrt(varpi^2(r(xi)))]_k / (k + 1)
  for (int k = 0; k < order; ++k) {
    Series r(c.begin(), c.begin() + k + 1);
    const Series ir = inv(r);
    Series w = ir;
    const Series ir2 = mul(ir, ir);
    for (std::size_t q = 0; q < w.size(); ++q) w[q] = -2.0 * mu0_ * ir[q] + theta_ * ir2[q];
    w[0] += 1.0;
    c[k + 1] = sqrt_series(w)[k] / (k + 1);
  }
  std::copy(c.begin(), c.end(), out);
}

SchwarzschildXi schwarzschild_xi(const SchwarzschildParams& p, double theta, double r_min, double r_max) {
  auto map = std::make_shared<RadialMap>(p.mu0, theta, r_min, r_max);
  const ScalarField r = ScalarField::apply(map, x1);
  const ScalarField ir = 1.0 / r;
  DMetric d;
  d.g1 = -1.0;
  d.g2 = -(r * r);
  d.h3 = -(r * r) * pow(sin(x2), 2.0);
  d.h4 = 1.0 - 2.0 * p.mu0 * ir + theta * ir * ir;
  return {d, map};
}

// ---------------------------------------------------------------------------
// Noncommutative corrections

std::array<double, 4> nc_vacuum_correction(double r, double vartheta, double alpha) {
  const double d = r - alpha;
  if (d == 0.0) throw ZeroDenominator("pole of the vacuum corrections at r = alpha");
  if (r == 0.0) throw ZeroDenominator("pole of the vacuum corrections at r = 0");
  const double g1 = -alpha * (4 * r - 3 * alpha) / (16 * r * r * d * d);
  const double g2 = -(2 * r * r - 17 * alpha * d) / (32 * r * d);
  const double h3 = -((r * r + alpha * r - alpha * alpha) * std::cos(vartheta) - alpha * (2 * r - alpha)) / (16 * r * d);
  const double h4 = -alpha * (8 * r - 11 * alpha) / (16 * std::pow(r, 4));
  return {g1, g2, h3, h4};
}

DMetric nc_vacuum_metric(const SchwarzschildParams& p, double theta) {
  const double a = p.alpha();
  const ScalarField r = x1, d = x1 - a;
  const double t2 = theta * theta;
  DMetric m = schwarzschild_prime(p);
  m.g1 = m.g1 + t2 * (-a * (4.0 * r - 3.0 * a) / (16.0 * r * r * d * d));
  m.g2 = m.g2 + t2 * (-(2.0 * r * r - 17.0 * a * d) / (32.0 * r * d));
  m.h3 = m.h3 + t2 * (-((r * r + a * r - a * a) * cos(x2) - a * (2.0 * r - a)) / (16.0 * r * d));
  m.h4 = m.h4 + t2 * (-a * (8.0 * r - 11.0 * a) / (16.0 * pow(r, 4.0)));
  return m;
}

double lower_gamma_32(double z) {
  if (z < 0.0) throw std::domain_error("lower incomplete gamma needs z >= 0");
  if (z == 0.0) return 0.0;
  // p = u^2 removes the square-root endpoint behaviour
  auto f = [](double u) { return 2.0 * u * u * std::exp(-u * u); };
  return adaptive_quadrature<double>(f, 0.0, std::sqrt(z), tight());
}

void LowerGamma32::taylor(double z, int order, double* out) const {
  if (!(z > 0.0)) throw NonDifferentiable("lower_gamma_3_2 is not smooth at z <= 0");
  out[0] = lower_gamma_32(z);
  if (order == 0) return;
  // derivative sqrt(z) e^{-z} expanded about z
  Series root(order, 0.0), ex(order, 0.0);
  double binom = 1.0;
  for (int k = 0; k < order; ++k) {
    root[k] = binom * std::pow(z, 0.5 - k);
    binom *= (0.5 - k) / (k + 1);
    ex[k] = std::exp(-z) * std::pow(-1.0, k) / factorial(k);
  }
  const Series g = mul(root, ex);
  for (int k = 0; k < order; ++k) out[k + 1] = g[k] / (k + 1);
}

std::array<double, 4> nc_gamma_coefficients(double r, double vartheta, double mu0, double theta) {
  if (!(theta > 0.0)) throw ConfigError("nc_gamma needs theta > 0");
  if (!(r > 0.0)) throw ChartViolation("nc_gamma needs r > 0");
  const double h4 = 1.0 - 4.0 * mu0 * lower_gamma_32(r * r / (4.0 * theta)) / (std::sqrt(kPi) * r);
  const double s = std::sin(vartheta);
  return {-1.0 / h4, -r * r, -r * r * s * s, h4};
}

DMetric nc_gamma_metric(double mu0, double theta) {
  if (!(theta > 0.0)) throw ConfigError("nc_gamma needs theta > 0");
  const ScalarField gamma = ScalarField::apply(std::make_shared<LowerGamma32>(), x1 * x1 / (4.0 * theta));
  const ScalarField h4 = 1.0 - 4.0 * mu0 / std::sqrt(kPi) * gamma / x1;
  DMetric d;
  d.g1 = -1.0 / h4;
  d.g2 = -(x1 * x1);
  d.h3 = -(x1 * x1) * pow(sin(x2), 2.0);
  d.h4 = h4;
  return d;
}

ScalarField gaussian_density(double mu0, double theta) {
  if (!(theta > 0.0)) throw ConfigError("gaussian density needs theta > 0");
  return mu0 / std::pow(4.0 * kPi * theta, 1.5) * exp(-(x1 * x1) / (4.0 * theta));
}

std::array<ScalarField, 4> nc_matter_source(const ScalarField& rho) {
  const ScalarField p1 = -rho;
  const ScalarField pp = -rho - 0.5 * x1 * derivative(rho, X1);
  return {-p1, -pp, -pp, rho};
}

Eigen::Matrix4d nc_matter_source(const ScalarField& rho, const Point& p) {
  const auto t = nc_matter_source(rho);
  Evaluator e(p);
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  for (int a = 0; a < 4; ++a) m(a, a) = e.value(t[a]);
  return m;
}

// ---------------------------------------------------------------------------
// Rotoids

RotoidGenerating rotoid_generating(const RotoidParams& p) {
  const ScalarField mu = p.mu0 + p.theta_bar * p.mu1;
  const ScalarField ms = p.s_uses_mu0 ? p.mu0 : mu;
  RotoidGenerating g;
  g.q = 1.0 - 2.0 * mu / x1;
  g.s = p.q0 / (4.0 * ms * ms) * sin(p.omega0 * v + p.phi0);
  g.b2 = g.q + p.theta_bar * g.s;
  return g;
}

namespace {

DMetric vertical_from_b2(const ScalarField& b2, const RotoidFrame& frame) {
  if (!b2.depends_on(V)) throw DegenerateVertical("(sqrt|b^2|)* vanishes identically: b^2 does not depend on v");
  DMetric d;
  d.g1 = -exp(frame.psi);
  d.g2 = d.g1;
  // -4 [(sqrt|b2|)*]^2 = -[(b2)*]^2 / |b2|
  const ScalarField db2 = derivative(b2, V);
  d.h3 = -(db2 * db2) / abs(b2);
  d.h4 = b2;
  d.N = NConnection{frame.w1, frame.w2, frame.n1, frame.n2};
  return d;
}

}  // namespace

DMetric rotoid_metric(const RotoidParams& p, const RotoidFrame& frame) {
  return vertical_from_b2(rotoid_generating(p).b2, frame);
}

ScalarField rotoid_h3_linearized(const RotoidParams& p) {
  const RotoidGenerating g = rotoid_generating(p);
  const ScalarField rq = sqrt(abs(g.q));
  const ScalarField drq = derivative(rq, V);
  if (drq.is_zero()) throw DegenerateVertical("(sqrt|q|)* vanishes identically");
  return -4.0 * drq * drq * (1.0 + p.theta_bar * derivative(g.s / rq, V) / drq);
}

double rotoid_horizon(double phi, const RotoidParams& p, const HorizonOptions& opt) {
  const RotoidGenerating g = rotoid_generating(p);
  const ScalarField mu = p.mu0 + p.theta_bar * p.mu1;
  // undamped when nothing on the right-hand side depends on r
  const bool r_dependent = g.s.depends_on(X1) || mu.depends_on(X1);
  const double damping = r_dependent ? 0.5 : 1.0;
  double r = 2.0 * p.mu0(Point(1.0, opt.vartheta, phi, 0.0));
  for (int it = 0; it < opt.max_iter; ++it) {
    const Point q(r, opt.vartheta, phi, 0.0);
    const double denom = 1.0 + p.theta_bar * g.s(q);
    if (!(denom > 0.0)) throw NonConvergent("horizon denominator is not positive");
    const double next = (1.0 - damping) * r + damping * 2.0 * mu(q) / denom;
    const double step = std::abs(next - r);
    r = next;
    if (step <= opt.tol * std::max(1.0, std::abs(r))) return r;
  }
  throw NonConvergent("horizon fixed point did not converge in " + std::to_string(opt.max_iter) + " iterations");
}

double horizon_eccentricity(const RotoidParams& p, int samples, const HorizonOptions& opt) {
  const double period = 2.0 * kPi / std::abs(p.omega0);
  double lo = INFINITY, hi = -INFINITY;
  for (int k = 0; k < samples; ++k) {
    const double r = rotoid_horizon(period * k / samples, p, opt);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return (hi - lo) / (hi + lo);
}

// ---------------------------------------------------------------------------
// Solitonic deformations

double solitonic_residual(const ScalarField& eta, int eps, const Point& p) {
  const Jet<4> j = eta.jet<4>(p);
  const double e = j.value();
  const double e_v = j.derivative({0, 0, 1, 0});
  const double e_vv = j.derivative({0, 0, 2, 0});
  const double e_vvvv = j.derivative({0, 0, 4, 0});
  const double e_2v = j.derivative({0, 1, 1, 0});
  const double e_11 = j.derivative({2, 0, 0, 0});
  return e_11 + eps * (e_2v + 6.0 * (e_v * e_v + e * e_vv) + e_vvvv);
}

DMetric solitonic_rotoid_metric(const ScalarField& eta, const RotoidParams& p, const RotoidFrame& frame) {
  return vertical_from_b2(eta * rotoid_generating(p).b2, frame);
}

double eta_vertical_relation(const ScalarField& eta4, const ScalarField& h0, const ScalarField& h3,
                             const ScalarField& h4, const Point& p) {
  const Jet<1> e = eta4.jet<1>(p);
  const double ev = e.derivative({0, 0, 1, 0});
  if (ev == 0.0) throw DegenerateVertical("eta4* vanishes: eta3 would be zero");
  if (e.value() == 0.0) throw ZeroDenominator("eta4 vanishes");
  // (sqrt|eta4|)* = eta4* / (2 sqrt|eta4|)
  const double d = ev / (2.0 * std::sqrt(std::abs(e.value())));
  const double a = h0(p), ratio = h4(p) / h3(p);
  return a * a * std::abs(ratio) * d * d;
}

}  // namespace nholo
