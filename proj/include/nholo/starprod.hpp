#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <complex>

#include "nholo/dgeometry.hpp"
#include "nholo/fields.hpp"
#include "nholo/nconnection.hpp"

namespace nholo {

// Constant antisymmetric theta^{ab} = scale * direction.
struct ThetaTensor {
  Eigen::Matrix4d direction = Eigen::Matrix4d::Zero();
  double scale = 0.0;

  static ThetaTensor from_components(const Eigen::Matrix4d& theta);  // scale 1
  Eigen::Matrix4d full() const { return scale * direction; }
};

// c0 + c1 t + c2 t^2, truncated after t^2.
template <typename T = std::complex<double>>
struct ThetaSeries {
  static constexpr int kOrder = 2;
  std::array<T, kOrder + 1> c{};

  T value(double t) const { return c[0] + t * (c[1] + t * c[2]); }
  ThetaSeries conj() const {
    ThetaSeries r;
    for (int k = 0; k <= kOrder; ++k) r.c[k] = std::conj(c[k]);
    return r;
  }
  ThetaSeries& operator+=(const ThetaSeries& o) {
    for (int k = 0; k <= kOrder; ++k) c[k] += o.c[k];
    return *this;
  }
  ThetaSeries& operator-=(const ThetaSeries& o) {
    for (int k = 0; k <= kOrder; ++k) c[k] -= o.c[k];
    return *this;
  }
  ThetaSeries& operator*=(const T& s) {
    for (auto& x : c) x *= s;
    return *this;
  }
};

template <typename T>
ThetaSeries<T> operator+(ThetaSeries<T> a, const ThetaSeries<T>& b) { return a += b; }
template <typename T>
ThetaSeries<T> operator-(ThetaSeries<T> a, const ThetaSeries<T>& b) { return a -= b; }
template <typename T>
ThetaSeries<T> operator*(ThetaSeries<T> a, const T& s) { return a *= s; }
template <typename T>
ThetaSeries<T> operator*(const ThetaSeries<T>& a, const ThetaSeries<T>& b) {
  ThetaSeries<T> r;
  for (int j = 0; j <= ThetaSeries<T>::kOrder; ++j)
    for (int k = 0; j + k <= ThetaSeries<T>::kOrder; ++k) r.c[j + k] += a.c[j] * b.c[k];
  return r;
}

using Series = ThetaSeries<>;

// Complex field re + i im.
struct ComplexField {
  ScalarField re, im;
  ComplexField() = default;
  ComplexField(ScalarField r, ScalarField i = 0.0) : re(std::move(r)), im(std::move(i)) {}  // NOLINT
  std::complex<double> operator()(const Point& p) const;
};

// Theta-series of complex fields.
using SeriesField = std::array<ComplexField, ThetaSeries<>::kOrder + 1>;

Series evaluate(const SeriesField& f, const Point& p);

// Truncated Moyal product over N-elongated derivatives; coefficients in powers of theta.scale.
SeriesField star_field(const SeriesField& f, const SeriesField& g, const ThetaTensor& theta, const NConnection& N,
                       int order = 2);
Series star(const ScalarField& f, const ScalarField& g, const ThetaTensor& theta, const NConnection& N,
            const Point& p, int order = 2);

// sum_k |c_k| scale^k of (f*g)*h - f*(g*h).
double associativity_defect(const ScalarField& f, const ScalarField& g, const ScalarField& h,
                            const ThetaTensor& theta, const NConnection& N, const Point& p);

// e_alpha^A(theta) = base + i theta first + theta^2 second; (alpha, A) = (row, col).
struct FrameExpansion {
  std::array<std::array<ScalarField, 4>, 4> base, first, second;

  static FrameExpansion identity();
  SeriesField component(int alpha, int A) const;
};

using SeriesMatrix = std::array<std::array<Series, 4>, 4>;

SeriesMatrix deform_frame(const FrameExpansion& fe, const Point& p);

// Frame of a d-metric: rows alpha, columns A; g = e^T diag(eps) e.
FrameExpansion frame_from_dmetric(const DMetric& d);

// max over orders of |sum_alpha dual^alpha_A * e_alpha^B - delta_A^B|, with dual(alpha, A) = dual^alpha_A.
struct DualityDefect {
  std::array<double, 3> by_order{};
  double max() const { return std::max({by_order[0], by_order[1], by_order[2]}); }
};
DualityDefect frame_duality(const FrameExpansion& fe, const FrameExpansion& dual, const ThetaTensor& theta,
                            const NConnection& N, const Point& p);

// g_ab = 1/2 eta_AB [e_a^A * (e_b^B)^dagger + e_b^B * (e_a^A)^dagger].
SeriesMatrix metric_from_frames(const FrameExpansion& fe, const Eigen::Vector4d& eta, const ThetaTensor& theta,
                                const NConnection& N, const Point& p);

}  // namespace nholo
