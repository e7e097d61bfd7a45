#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "nholo/errors.hpp"
#include "nholo/jet.hpp"

namespace nholo {

inline double quad_norm(double x) { return std::abs(x); }

template <int K>
double quad_norm(const Jet<K>& j) {
  double m = 0.0;
  for (double x : j.c) m = std::max(m, std::abs(x));
  return m;
}

struct QuadratureOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-15;
  int max_depth = 40;
};

namespace detail {

inline constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights of the odd-indexed Kronrod nodes.
inline constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename V, typename F>
V kronrod_panel(F& f, double a, double b, double& err) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const V fc = f(c);
  V k = fc * kKronrodWeights[7];
  V g = fc * kGaussWeights[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = h * kKronrodNodes[i];
    const V s = f(c - dx) + f(c + dx);
    k = k + s * kKronrodWeights[i];
    if (i % 2 == 1) g = g + s * kGaussWeights[i / 2];
  }
  k = k * h;
  g = g * h;
  err = quad_norm(k - g);
  return k;
}

template <typename V, typename F>
V kronrod_adapt(F& f, double a, double b, const V& whole, double err, double tol, int depth,
                const QuadratureOptions& opt, double& worst) {
  const double bound = std::max(tol, opt.rel_tol * quad_norm(whole));
  if (err <= bound) return whole;
  if (depth >= opt.max_depth || !std::isfinite(err)) {
    worst = std::max(worst, std::isfinite(err) ? err : INFINITY);
    return whole;
  }
  const double m = 0.5 * (a + b);
  double el = 0.0, er = 0.0;
  const V left = kronrod_panel<V>(f, a, m, el);
  const V right = kronrod_panel<V>(f, m, b, er);
  return kronrod_adapt<V>(f, a, m, left, el, 0.5 * tol, depth + 1, opt, worst) +
         kronrod_adapt<V>(f, m, b, right, er, 0.5 * tol, depth + 1, opt, worst);
}

}  // namespace detail

// Adaptive 7/15-point Gauss-Kronrod; V is double or a Jet.
template <typename V, typename F>
V adaptive_quadrature(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  if (a == b) return f(a) * 0.0;
  double err = 0.0, worst = 0.0;
  const V whole = detail::kronrod_panel<V>(f, a, b, err);
  V r = detail::kronrod_adapt<V>(f, a, b, whole, err, opt.abs_tol, 0, opt, worst);
  if (worst > 0.0 && worst > opt.rel_tol * std::max(1.0, quad_norm(r)))
    throw QuadratureError("adaptive quadrature did not converge on [" + std::to_string(a) + ", " +
                              std::to_string(b) + "]",
                          worst);
  return r;
}

}  // namespace nholo
