#include "nholo/spline.hpp"

#include <algorithm>
#include <cmath>

namespace nholo {

CubicSpline::CubicSpline(double lo, double hi, std::vector<double> values, std::string name)
    : lo_(lo), y_(std::move(values)), name_(std::move(name)) {
  const int n = static_cast<int>(y_.size());
  if (n < 3) throw std::invalid_argument("spline needs at least three nodes");
  h_ = (hi - lo) / (n - 1);
  // not-a-knot ends: m0 = 2 m1 - m2 and m_{n-1} = 2 m_{n-2} - m_{n-3}
  m_.assign(n, 0.0);
  const int k = n - 2;
  std::vector<double> a(k, 1.0), b(k, 4.0), c(k, 1.0), r(k);
  for (int i = 0; i < k; ++i) r[i] = 6.0 * (y_[i + 2] - 2.0 * y_[i + 1] + y_[i]) / (h_ * h_);
  b.front() = 6.0;
  c.front() = 0.0;
  b.back() = 6.0;
  a.back() = 0.0;
  for (int i = 1; i < k; ++i) {
    const double q = a[i] / b[i - 1];
    b[i] -= q * c[i - 1];
    r[i] -= q * r[i - 1];
  }
  m_[k] = r[k - 1] / b[k - 1];
  for (int i = k - 2; i >= 0; --i) m_[i + 1] = (r[i] - c[i] * m_[i + 2]) / b[i];
  m_[0] = 2.0 * m_[1] - m_[2];
  m_[n - 1] = 2.0 * m_[n - 2] - m_[n - 3];
}

void CubicSpline::taylor(double x, int order, double* out) const {
  const int n = static_cast<int>(y_.size());
  int k = static_cast<int>(std::floor((x - lo_) / h_));
  k = std::clamp(k, 0, n - 2);
  const double a = lo_ + k * h_;
  const double t = x - a;
  const double y0 = y_[k], y1 = y_[k + 1], m0 = m_[k], m1 = m_[k + 1];
  // s(a + t) = y0 + b t + m0/2 t^2 + (m1 - m0)/(6h) t^3
  const double b = (y1 - y0) / h_ - h_ * (2.0 * m0 + m1) / 6.0;
  const double c3 = (m1 - m0) / (6.0 * h_);
  const double s0 = y0 + t * (b + t * (0.5 * m0 + t * c3));
  const double s1 = b + t * (m0 + 3.0 * c3 * t);
  const double s2 = 0.5 * m0 + 3.0 * c3 * t;
  const double coeffs[4] = {s0, s1, s2, c3};
  for (int q = 0; q <= order; ++q) out[q] = q < 4 ? coeffs[q] : 0.0;
}

ScalarField bicubic_spline_field(const Eigen::MatrixXd& values, double x1_lo, double x1_hi, double x2_lo,
                                 double x2_hi) {
  const int n1 = static_cast<int>(values.rows());
  const int n2 = static_cast<int>(values.cols());
  const ScalarField x1 = ScalarField::coordinate(X1);
  const ScalarField x2 = ScalarField::coordinate(X2);
  // s(x1, x2) = sum_j B_j(x2) C_j(x1): C_j interpolates column j along x1,
  // B_j is the cardinal spline of node j along x2.
  ScalarField sum(0.0);
  for (int j = 0; j < n2; ++j) {
    std::vector<double> column(n1), unit(n2, 0.0);
    for (int i = 0; i < n1; ++i) column[i] = values(i, j);
    unit[j] = 1.0;
    auto c = std::make_shared<CubicSpline>(x1_lo, x1_hi, std::move(column), "spline_x1");
    auto b = std::make_shared<CubicSpline>(x2_lo, x2_hi, std::move(unit), "cardinal_x2");
    sum = sum + ScalarField::apply(c, x1) * ScalarField::apply(b, x2);
  }
  return sum;
}

}  // namespace nholo
