#pragma once

#include <Eigen/Core>

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nholo/dgeometry.hpp"
#include "nholo/fields.hpp"

namespace nholo {

struct SourceDiag {
  ScalarField upsilon2;  // Y_1^1 = Y_2^2 = Y_2
  ScalarField upsilon4;  // Y_3^3 = Y_4^4 = Y_4
};

struct GeneratingData {
  ScalarField psi;
  ScalarField f = ScalarField::coordinate(V);
  ScalarField f0;
  ScalarField h0 = 1.0;
  ScalarField varsigma0 = 1.0;
  ScalarField n1_1, n1_2;  // 1n_k
  ScalarField n2_1, n2_2;  // 2n_k
  ScalarField upsilon2, upsilon4;
  ScalarField w1_free, w2_free;  // arbitrary w_i of the vacuum branch
  Signs eps{-1, -1, -1, 1};
  double theta = 0.0;
  double v0 = 0.0;               // integration base
  double breakpoint_step = 0.0;  // line-cache spacing, 0 disables caching
  bool lc_mode = false;          // h0 = 2 and integrable w
};

// Generator fields.
ScalarField varsigma_field(const GeneratingData& gd);
std::pair<ScalarField, ScalarField> w_fields(const GeneratingData& gd);
std::pair<ScalarField, ScalarField> n_fields(const GeneratingData& gd);
ScalarField effective_h0(const GeneratingData& gd);

double varsigma(const GeneratingData& gd, const Point& p);
std::pair<double, double> w_coefficients(const GeneratingData& gd, const Point& p);
std::pair<double, double> n_coefficients(const GeneratingData& gd, const Point& p);
DMetric build_solution(const GeneratingData& gd);

// Source that the literal horizontal residual sees for g_k = eps_k e^psi
// when psi solves eps1 psi_11 + eps2 psi_22 = Y_4.
ScalarField horizontal_source(const GeneratingData& gd);

// Reduced d-connection residuals.
double residual_h(const DMetric& d, const ScalarField& upsilon4, const Point& p, const DiffOptions& opt = {});
double residual_v(const DMetric& d, const ScalarField& upsilon2, const Point& p, const DiffOptions& opt = {});
std::pair<double, double> residual_w(const DMetric& d, const Point& p, const DiffOptions& opt = {});
std::pair<double, double> residual_n(const DMetric& d, const Point& p, const DiffOptions& opt = {});

// phi = ln |h4* / sqrt|h3 h4||
ScalarField vertical_phi(const DMetric& d);

// Levi-Civita constraint residuals: psi equation, phi relation, N-curvature of w, curl of n.
std::array<double, 4> lc_constraints(const DMetric& d, const ScalarField& upsilon2, const ScalarField& upsilon4,
                                     const Point& p, const DiffOptions& opt = {});

// Replaces w_i by the integrable choice w_i = d_i Phi / Phi*.
DMetric lc_project_w(const DMetric& d, const ScalarField& potential);

// Poisson-type solve of eps1 psi_11 + eps2 psi_22 = Y_4 on a rectangle.
struct RectDomain {
  double x1_lo = 0.0, x1_hi = 1.0, x2_lo = 0.0, x2_hi = 1.0;
};

struct PsiSolution {
  ScalarField psi;           // bicubic spline interpolant of the nodal values
  Eigen::MatrixXd values;    // values(i, j) at (x1_i, x2_j)
  RectDomain domain;
  double residual = 0.0;     // max discrete residual at interior nodes
  double x1(int i) const { return domain.x1_lo + i * (domain.x1_hi - domain.x1_lo) / (values.rows() - 1); }
  double x2(int j) const { return domain.x2_lo + j * (domain.x2_hi - domain.x2_lo) / (values.cols() - 1); }
};

PsiSolution solve_psi(const ScalarField& upsilon4, const RectDomain& domain, const ScalarField& boundary,
                      int eps1, int eps2, int n1, int n2);

// Uniform evaluation grid over (x1, x2, v) at fixed y4.
struct Grid {
  std::array<double, 3> lo{0.0, 0.0, 0.0};
  std::array<double, 3> hi{1.0, 1.0, 1.0};
  std::array<int, 3> n{33, 33, 33};
  double y4 = 0.0;

  double spacing(int axis) const { return n[axis] > 1 ? (hi[axis] - lo[axis]) / (n[axis] - 1) : 0.0; }
  Point point(int i, int j, int k) const {
    return Point(lo[0] + i * spacing(0), lo[1] + j * spacing(1), lo[2] + k * spacing(2), y4);
  }
  std::size_t size() const { return static_cast<std::size_t>(n[0]) * n[1] * n[2]; }
  std::string describe() const;
};

struct EquationResidual {
  std::string id;
  double max_abs = 0.0;
  double mean_abs = 0.0;
  Point argmax = Point::Zero();
  double tol = 0.0;
  std::size_t samples = 0;
  bool pass() const { return max_abs <= tol; }
};

// Accumulates max and fixed-order mean of |residual|.
class ResidualAccumulator {
 public:
  explicit ResidualAccumulator(std::string id) { r_.id = std::move(id); }
  void add(double value, const Point& p);
  EquationResidual finish(double tol) const;

 private:
  EquationResidual r_;
  double sum_ = 0.0;
};

struct ResidualReport {
  std::string section;
  std::vector<EquationResidual> rows;
  std::string grid;
  bool pass() const;
  void write_tsv(std::ostream& os) const;
};

// Scans the grid for sign changes of |.| arguments, f - f0, f*, the metric
// coefficients and vanishing denominators of the generator.
void validate_chart(const GeneratingData& gd, const Grid& grid);
void validate_signs(const DMetric& d, const Grid& grid);

ResidualReport dconnection_report(const DMetric& d, const SourceDiag& src, const Grid& grid, double tol,
                                  const DiffOptions& opt = {}, bool include_h = true);
ResidualReport lc_report(const DMetric& d, const SourceDiag& src, const Grid& grid, double tol,
                         const DiffOptions& opt = {});
// |E_ab - source_ab| for a coordinate metric; source may be null for vacuum.
ResidualReport einstein_report(const CoordinateMetric& g, const Grid& grid, double tol,
                               const std::function<Eigen::Matrix4d(const Point&)>& source = {},
                               const DiffOptions& opt = {});

}  // namespace nholo
