#pragma once

#include <Eigen/Core>

#include <array>
#include <vector>

#include "nholo/dgeometry.hpp"
#include "nholo/fields.hpp"

namespace nholo {

// Generating function F(x1, x2, v, y4), 1-homogeneous in y = (v, y4).
// The split F = F3(x, v) + F4(x, y) is kept as metadata only.
struct FinslerFunction {
  ScalarField F;
  ScalarField F3, F4;
  bool split = false;

  FinslerFunction() = default;
  explicit FinslerFunction(ScalarField f) : F(std::move(f)) {}
  static FinslerFunction from_split(const ScalarField& f3, const ScalarField& f4);

  ScalarField lagrangian() const { return F * F; }
};

// f_ab = 1/2 d^2 F^2 / dy^a dy^b; a, b index (v, y4).
Eigen::Matrix2d hessian(const FinslerFunction& F, const Point& p);

// G^a and N^a_i = dG^a / dy^(2+i); spray(a), N(a, i).
struct CartanData {
  Eigen::Vector2d spray;
  Eigen::Matrix2d N;
  Eigen::Matrix2d hessian;
};
CartanData cartan(const FinslerFunction& F, const Point& p);
inline Eigen::Matrix2d cartan_n(const FinslerFunction& F, const Point& p) { return cartan(F, p).N; }

// Symbolic Hessian and Cartan N-connection fields.
std::array<std::array<ScalarField, 2>, 2> hessian_fields(const FinslerFunction& F);
NConnection cartan_n_fields(const FinslerFunction& F);

// Sasaki lift with f_ij = f_(2+i)(2+j): diagonal Hessian entries and the Cartan N.
// The off-diagonal f_34 is not representable in a DMetric; sasaki_metric keeps it.
DMetric sasaki_lift(const FinslerFunction& F);
Eigen::Matrix4d sasaki_metric(const FinslerFunction& F, const Point& p);

// Sampled identities.
double homogeneity_defect(const FinslerFunction& F, const Point& p,
                          const std::vector<double>& lambdas = {-2.0, -1.0, 0.5, 3.0});
double euler_defect(const FinslerFunction& F, const Point& p);     // |y^a dF/dy^a - F|
double quadratic_defect(const FinslerFunction& F, const Point& p);  // |F^2 - f_ab y^a y^b|

struct ThetaCompatibility {
  double theta = 0.0;   // Theta_1'
  double defect = 0.0;  // |Theta_1' - Theta_2'|
  Eigen::Vector2d theta_i = Eigen::Vector2d::Zero();
  Eigen::Vector2d w_ratio = Eigen::Vector2d::Ones();
  Eigen::Vector2d n_ratio = Eigen::Vector2d::Ones();
};

// Ratios 0/0 count as 1; a zero Cartan coefficient under a nonzero source one throws ZeroDenominator.
ThetaCompatibility theta_compatibility(const Eigen::Vector2d& w_ring, const Eigen::Vector2d& cw,
                                       const Eigen::Vector2d& n_ring, const Eigen::Vector2d& cn);

// E(alpha', alpha'') with identity diagonal blocks and the off-block entries solving
//   g_ring_i = g_i + h_a (E(a, i))^2,  h_ring_a = g_i (E(i, a))^2 + h_a.
// Each relation is solved through one entry: E(v, x1), E(y4, x2), E(x1, v), E(x2, y4).
// E(y4, x2) and E(x1, v) vanish whenever g_ring_2 = g_2 and h_ring_3 = h_3.
struct VielbeinSolution {
  Eigen::Matrix4d E = Eigen::Matrix4d::Identity();
  double residual = 0.0;
};
VielbeinSolution vielbein_solve(const Eigen::Vector2d& g_ring, const Eigen::Vector2d& h_ring, const Eigen::Vector2d& g,
                                const Eigen::Vector2d& h, const std::array<int, 4>& signs = {1, 1, 1, 1});

// Max defect of the four quadratic relations.
double vielbein_residual(const Eigen::Matrix4d& E, const Eigen::Vector2d& g_ring, const Eigen::Vector2d& h_ring,
                         const Eigen::Vector2d& g, const Eigen::Vector2d& h);

struct TransformOptions {
  double theta_tol = 1e-8;
  std::array<int, 4> offdiag_signs{1, 1, 1, 1};
  std::array<int, 4> diag_signs{1, 1, 1, 1};
};

struct TransformState {
  Point point = Point::Zero();
  // source d-metric
  Eigen::Vector2d g_ring, h_ring, w_ring, n_ring;
  // Finsler data (f_1, f_2, f_3, f_4) and Cartan N
  Eigen::Vector4d f;
  Eigen::Vector2d cw, cn;
  ThetaCompatibility theta;
  // intermediate d-metric
  Eigen::Vector2d g, h, w, n;
  Eigen::Matrix4d E;           // e_ring^{alpha'}_{alpha''}
  Eigen::Vector4d scaling;     // e^{alpha'}_alpha
  int sign_product = 1;
  bool split = false;
  // residuals of steps 1, 3, 4 and of the diagonal scaling
  double n_residual = 0.0;
  double theta_residual = 0.0;
  double vielbein_residual = 0.0;
  double scaling_residual = 0.0;
};

TransformState riemann_to_finsler(const DMetric& d, const FinslerFunction& F, const Point& p,
                                  const TransformOptions& opt = {});

}  // namespace nholo
