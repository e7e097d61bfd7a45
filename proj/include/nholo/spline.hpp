#pragma once

#include <vector>

#include "nholo/fields.hpp"

namespace nholo {

// Not-a-knot cubic spline on a uniform grid; reproduces cubics and
// extrapolates with the end pieces.
class CubicSpline : public UnivariateFunction {
 public:
  CubicSpline(double lo, double hi, std::vector<double> values, std::string name = "spline");

  std::string name() const override { return name_; }
  void taylor(double x, int order, double* out) const override;

 private:
  double lo_, h_;
  std::vector<double> y_, m_;
  std::string name_;
};

// Tensor-product bicubic spline through values(i, j) at uniform
// nodes of [x1_lo, x1_hi] x [x2_lo, x2_hi], as a field of (x1, x2).
ScalarField bicubic_spline_field(const Eigen::MatrixXd& values, double x1_lo, double x1_hi, double x2_lo,
                                 double x2_hi);

}  // namespace nholo
