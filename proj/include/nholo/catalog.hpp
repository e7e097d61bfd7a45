#pragma once

#include <array>
#include <memory>
#include <vector>

#include "nholo/dgeometry.hpp"
#include "nholo/fields.hpp"

// Solution families. Coordinates are (x1, x2, v, y4) = (r or xi, theta, phi, t).
namespace nholo {

struct SchwarzschildParams {
  double mu0 = 1.0;
  double G = 1.0;
  double c = 1.0;
  double alpha() const { return 2.0 * G * mu0 / (c * c); }
};

// Throws ChartViolation unless r > alpha.
void check_schwarzschild_chart(const SchwarzschildParams& p, double r);

DMetric schwarzschild_prime(const SchwarzschildParams& p);

// r(xi) for xi = xi_ref + int_{r_ref}^r dr / sqrt(varpi^2), varpi^2 = 1 - 2 mu0 / r + theta / r^2,
// tabulated on [r_min, r_max] and refined by Newton; Taylor coefficients from the ODE r' = sqrt(varpi^2).
class RadialMap : public UnivariateFunction {
 public:
  RadialMap(double mu0, double theta, double r_min, double r_max, int table_size = 257);

  std::string name() const override { return "r_of_xi"; }
  void taylor(double xi, int order, double* out) const override;

  double xi_of_r(double r) const;
  double r_of_xi(double xi) const;
  double varpi2(double r) const { return 1.0 - 2.0 * mu0_ / r + theta_ / (r * r); }
  double xi_min() const { return xi_.front(); }
  double xi_max() const { return xi_.back(); }

 private:
  double mu0_, theta_;
  std::vector<double> r_, xi_;
};

struct SchwarzschildXi {
  DMetric metric;
  std::shared_ptr<const RadialMap> map;
};

// Throws NonMonotoneMap when varpi^2 <= 0 somewhere on [r_min, r_max].
SchwarzschildXi schwarzschild_xi(const SchwarzschildParams& p, double theta, double r_min, double r_max);

// theta^2 coefficients of the noncommutative vacuum corrections: (g1, g2, h3, h4).
std::array<double, 4> nc_vacuum_correction(double r, double vartheta, double alpha);
// Schwarzschild plus theta^2 times the corrections above.
DMetric nc_vacuum_metric(const SchwarzschildParams& p, double theta);

// gamma(3/2, z) = int_0^z p^{1/2} e^{-p} dp.
double lower_gamma_32(double z);
class LowerGamma32 : public UnivariateFunction {
 public:
  std::string name() const override { return "lower_gamma_3_2"; }
  void taylor(double z, int order, double* out) const override;
};

// (g1, g2, h3, h4) at (r, vartheta) with h4 = 1 - 4 mu0 gamma(3/2, r^2/4theta) / (sqrt(pi) r).
std::array<double, 4> nc_gamma_coefficients(double r, double vartheta, double mu0, double theta);
DMetric nc_gamma_metric(double mu0, double theta);

// Smeared point mass mu0 e^{-r^2/4theta} / (4 pi theta)^{3/2}; an external convention.
ScalarField gaussian_density(double mu0, double theta);

// diag(-p1, -p_perp, -p_perp, rho) with p1 = -rho and p_perp = -rho - (r/2) d_r rho.
std::array<ScalarField, 4> nc_matter_source(const ScalarField& rho);
Eigen::Matrix4d nc_matter_source(const ScalarField& rho, const Point& p);

struct Polarization {
  ScalarField leading;     // value at theta = 0
  ScalarField correction;  // theta^2 coefficient
  ScalarField composite(double theta) const { return leading + correction * (theta * theta); }
};

struct RotoidParams {
  ScalarField mu0 = 1.0;
  ScalarField mu1 = 0.0;
  ScalarField q0 = 4.0;  // q0(r)
  double omega0 = 1.0;
  double phi0 = 0.0;
  double theta_bar = 0.0;
  bool s_uses_mu0 = false;  // s = q0 / 4 mu0^2 instead of q0 / 4 mu^2
};

struct RotoidGenerating {
  ScalarField q, s, b2;
};

RotoidGenerating rotoid_generating(const RotoidParams& p);

struct RotoidFrame {
  ScalarField psi;
  ScalarField w1, w2, n1, n2;
};

// h4 = b^2, h3 = -4 [(sqrt|b^2|)*]^2, horizontal block -e^psi.
DMetric rotoid_metric(const RotoidParams& p, const RotoidFrame& frame);
// First order in theta_bar: -4 [(sqrt|q|)*]^2 [1 + theta_bar (s / sqrt|q|)* / (sqrt|q|)*].
ScalarField rotoid_h3_linearized(const RotoidParams& p);

struct HorizonOptions {
  double vartheta = 1.5707963267948966;
  double tol = 1e-14;
  int max_iter = 100;
};

// Root r_+ of h4 = b^2 in r at fixed (vartheta, phi).
double rotoid_horizon(double phi, const RotoidParams& p, const HorizonOptions& opt = {});
// (r_max - r_min) / (r_max + r_min) over one period in phi.
double horizon_eccentricity(const RotoidParams& p, int samples = 720, const HorizonOptions& opt = {});

// eta.. + eps (eta' + 6 eta eta* + eta***)*   with . = d/dx1, ' = d/dx2, * = d/dv.
double solitonic_residual(const ScalarField& eta, int eps, const Point& p);

// h4 = eta b^2, h3 = -4 [(sqrt|eta b^2|)*]^2.
DMetric solitonic_rotoid_metric(const ScalarField& eta, const RotoidParams& p, const RotoidFrame& frame);

// eta3 = h0^2 |h4 / h3| [(sqrt|eta4|)*]^2; the sign is carried by h3.
double eta_vertical_relation(const ScalarField& eta4, const ScalarField& h0, const ScalarField& h3,
                             const ScalarField& h4, const Point& p);

}  // namespace nholo
