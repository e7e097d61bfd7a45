#include "nholo/starprod.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "nholo/errors.hpp"

namespace nholo {

namespace {

using cd = std::complex<double>;

bool is_zero(const ComplexField& f) { return f.re.is_zero() && f.im.is_zero(); }

ComplexField operator+(const ComplexField& a, const ComplexField& b) { return {a.re + b.re, a.im + b.im}; }

ComplexField scale(const ComplexField& a, cd s) {
  return {s.real() * a.re - s.imag() * a.im, s.real() * a.im + s.imag() * a.re};
}

ComplexField conj(const ComplexField& a) { return {a.re, -a.im}; }

// Elongated derivatives e_a f and e_a e_b f of one real field.
struct Derivs {
  std::array<ScalarField, 4> d1;
  std::array<std::array<ScalarField, 4>, 4> d2;
};

Derivs derivs(const ScalarField& f, const NConnection& N, int order) {
  Derivs d;
  if (order >= 1)
    for (int a = 0; a < 4; ++a) d.d1[a] = n_elongated_field(f, N, a);
  if (order >= 2)
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) d.d2[a][b] = n_elongated_field(d.d1[b], N, a);
  return d;
}

// theta^{a1 b1} ... theta^{ak bk} (e_a1..e_ak f)(e_b1..e_bk g) for real f, g.
ScalarField bidifferential(const ScalarField& f, const ScalarField& g, const Eigen::Matrix4d& D,
                           const NConnection& N, int k) {
  if (f.is_zero() || g.is_zero()) return 0.0;
  if (k == 0) return f * g;
  const Derivs df = derivs(f, N, k), dg = derivs(g, N, k);
  ScalarField sum(0.0);
  if (k == 1) {
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        if (D(a, b) != 0.0) sum = sum + D(a, b) * df.d1[a] * dg.d1[b];
    return sum;
  }
  for (int a1 = 0; a1 < 4; ++a1)
    for (int b1 = 0; b1 < 4; ++b1) {
      if (D(a1, b1) == 0.0) continue;
      for (int a2 = 0; a2 < 4; ++a2)
        for (int b2 = 0; b2 < 4; ++b2)
          if (D(a2, b2) != 0.0) sum = sum + D(a1, b1) * D(a2, b2) * df.d2[a1][a2] * dg.d2[b1][b2];
    }
  return sum;
}

ComplexField bidifferential(const ComplexField& f, const ComplexField& g, const Eigen::Matrix4d& D,
                            const NConnection& N, int k) {
  return {bidifferential(f.re, g.re, D, N, k) - bidifferential(f.im, g.im, D, N, k),
          bidifferential(f.re, g.im, D, N, k) + bidifferential(f.im, g.re, D, N, k)};
}

// (1/k!) (i/2)^k
const cd kMoyal[3] = {cd(1.0, 0.0), cd(0.0, 0.5), cd(-0.125, 0.0)};

SeriesField lift(const ScalarField& f) { return SeriesField{ComplexField(f), ComplexField(), ComplexField()}; }

}  // namespace

ThetaTensor ThetaTensor::from_components(const Eigen::Matrix4d& theta) {
  if ((theta + theta.transpose()).cwiseAbs().maxCoeff() > 0.0)
    throw ConfigError("theta tensor must be antisymmetric");
  return ThetaTensor{theta, 1.0};
}

std::complex<double> ComplexField::operator()(const Point& p) const {
  return {re.is_zero() ? 0.0 : re(p), im.is_zero() ? 0.0 : im(p)};
}

Series evaluate(const SeriesField& f, const Point& p) {
  Series s;
  for (int k = 0; k <= Series::kOrder; ++k) s.c[k] = f[k](p);
  return s;
}

SeriesField star_field(const SeriesField& f, const SeriesField& g, const ThetaTensor& theta, const NConnection& N,
                       int order) {
  if (order < 0 || order > Series::kOrder) throw UnsupportedOrder("star product is truncated at order 2");
  if ((theta.direction + theta.direction.transpose()).cwiseAbs().maxCoeff() > 0.0)
    throw ConfigError("theta tensor must be antisymmetric");
  SeriesField r;
  for (int j = 0; j <= Series::kOrder; ++j) {
    if (is_zero(f[j])) continue;
    for (int l = 0; j + l <= Series::kOrder; ++l) {
      if (is_zero(g[l])) continue;
      for (int k = 0; k <= order && j + l + k <= Series::kOrder; ++k) {
        if (k > 0 && theta.direction.isZero(0.0)) break;
        const ComplexField b = bidifferential(f[j], g[l], theta.direction, N, k);
        r[j + l + k] = r[j + l + k] + scale(b, kMoyal[k]);
      }
    }
  }
  return r;
}

Series star(const ScalarField& f, const ScalarField& g, const ThetaTensor& theta, const NConnection& N,
            const Point& p, int order) {
  return evaluate(star_field(lift(f), lift(g), theta, N, order), p);
}

double associativity_defect(const ScalarField& f, const ScalarField& g, const ScalarField& h,
                            const ThetaTensor& theta, const NConnection& N, const Point& p) {
  const SeriesField F = lift(f), G = lift(g), H = lift(h);
  const Series left = evaluate(star_field(star_field(F, G, theta, N), H, theta, N), p);
  const Series right = evaluate(star_field(F, star_field(G, H, theta, N), theta, N), p);
  double d = 0.0;
  for (int k = 0; k <= Series::kOrder; ++k) d += std::abs(left.c[k] - right.c[k]) * std::pow(theta.scale, k);
  return d;
}

FrameExpansion FrameExpansion::identity() {
  FrameExpansion fe;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      fe.base[a][b] = a == b ? 1.0 : 0.0;
      fe.first[a][b] = 0.0;
      fe.second[a][b] = 0.0;
    }
  return fe;
}

SeriesField FrameExpansion::component(int alpha, int A) const {
  return SeriesField{ComplexField(base[alpha][A]), ComplexField(0.0, first[alpha][A]),
                     ComplexField(second[alpha][A])};
}

SeriesMatrix deform_frame(const FrameExpansion& fe, const Point& p) {
  SeriesMatrix m;
  for (int a = 0; a < 4; ++a)
    for (int A = 0; A < 4; ++A) m[a][A] = evaluate(fe.component(a, A), p);
  return m;
}

FrameExpansion frame_from_dmetric(const DMetric& d) {
  FrameExpansion fe = FrameExpansion::identity();
  // e^A = sqrt|g_A| (dx^A + N_i^A dx^i) for vertical A
  for (int A = 0; A < 4; ++A) {
    const ScalarField s = sqrt(abs(d.coefficient(A)));
    for (int a = 0; a < 4; ++a) fe.base[a][A] = a == A ? s : ScalarField(0.0);
    if (A >= 2)
      for (int i = 0; i < 2; ++i) fe.base[i][A] = s * d.N(i, A);
  }
  return fe;
}

DualityDefect frame_duality(const FrameExpansion& fe, const FrameExpansion& dual, const ThetaTensor& theta,
                            const NConnection& N, const Point& p) {
  DualityDefect out;
  for (int A = 0; A < 4; ++A)
    for (int B = 0; B < 4; ++B) {
      Series s;
      for (int a = 0; a < 4; ++a)
        s += evaluate(star_field(dual.component(a, A), fe.component(a, B), theta, N), p);
      s.c[0] -= A == B ? 1.0 : 0.0;
      for (int k = 0; k <= Series::kOrder; ++k) out.by_order[k] = std::max(out.by_order[k], std::abs(s.c[k]));
    }
  return out;
}

SeriesMatrix metric_from_frames(const FrameExpansion& fe, const Eigen::Vector4d& eta, const ThetaTensor& theta,
                                const NConnection& N, const Point& p) {
  SeriesMatrix g;
  for (int a = 0; a < 4; ++a)
    for (int b = a; b < 4; ++b) {
      Series s;
      for (int A = 0; A < 4; ++A) {
        if (eta[A] == 0.0) continue;
        const SeriesField ea = fe.component(a, A), eb = fe.component(b, A);
        SeriesField ebc, eac;
        for (int k = 0; k <= Series::kOrder; ++k) {
          ebc[k] = conj(eb[k]);
          eac[k] = conj(ea[k]);
        }
        Series t = evaluate(star_field(ea, ebc, theta, N), p) + evaluate(star_field(eb, eac, theta, N), p);
        s += t * cd(0.5 * eta[A]);
      }
      g[a][b] = s;
      g[b][a] = s;
    }
  return g;
}

}  // namespace nholo
