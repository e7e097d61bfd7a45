#include <doctest.h>

#include <cmath>
#include <random>

#include "nholo/errors.hpp"
#include "nholo/starprod.hpp"

using namespace nholo;

namespace {

const ScalarField x1 = ScalarField::coordinate(X1);
const ScalarField x2 = ScalarField::coordinate(X2);
const ScalarField v = ScalarField::coordinate(V);
const ScalarField y4 = ScalarField::coordinate(Y4);
const ScalarField coords[4] = {x1, x2, v, y4};

ThetaTensor sample_theta(double scale) {
  Eigen::Matrix4d d = Eigen::Matrix4d::Zero();
  d(0, 1) = 1.0;
  d(0, 2) = -0.4;
  d(1, 3) = 0.7;
  d(2, 3) = 0.3;
  d -= d.transpose().eval();
  return ThetaTensor{d, scale};
}

double series_diff(const Series& a, const Series& b) {
  double m = 0.0;
  for (int k = 0; k < 3; ++k) m = std::max(m, std::abs(a.c[k] - b.c[k]));
  return m;
}

}  // namespace

TEST_CASE("theta series arithmetic truncates") {
  Series a, b;
  a.c = {1.0, 2.0, 3.0};
  b.c = {std::complex<double>(0, 1), 1.0, 1.0};
  const Series p = a * b;
  CHECK(p.c[0] == std::complex<double>(0, 1));
  CHECK(p.c[1] == std::complex<double>(1, 2));
  CHECK(p.c[2] == std::complex<double>(3, 3));
  CHECK(p.value(0.0) == p.c[0]);
  CHECK(a.conj().c[0] == 1.0);
}

TEST_CASE("commutative limit") {
  const ThetaTensor zero{};
  const ScalarField f = sin(x1) * v, g = exp(x2 + y4);
  const Point p(0.3, 0.4, 0.5, 0.6);
  const Series s = star(f, g, zero, NConnection{}, p);
  CHECK(s.c[0] == std::complex<double>(f(p) * g(p)));
  CHECK(s.c[1] == 0.0);
  CHECK(s.c[2] == 0.0);
  CHECK_THROWS_AS(star(f, g, zero, NConnection{}, p, 3), UnsupportedOrder);
}

TEST_CASE("coordinate commutators") {
  const ThetaTensor th = sample_theta(1.0);
  const Point p(0.3, -1.2, 2.0, 0.1);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const Series c = star(coords[a], coords[b], th, NConnection{}, p) -
                       star(coords[b], coords[a], th, NConnection{}, p);
      CHECK(std::abs(c.c[0]) <= 1e-14);
      CHECK(std::abs(c.c[1] - std::complex<double>(0, th.direction(a, b))) <= 1e-14);
      CHECK(std::abs(c.c[2]) <= 1e-14);
    }
}

TEST_CASE("first-order structure") {
  const ThetaTensor th = sample_theta(1.0);
  const ScalarField f = sin(x1 * x2) + v * y4, g = cos(x2) * exp(0.3 * v) + x1 * y4;
  const Point p(0.3, 0.4, 0.5, 0.6);
  const Series ff = star(f, f, th, NConnection{}, p);
  CHECK(std::abs(ff.c[1].imag()) <= 1e-14);
  // antisymmetric part at order one equals i theta^{ab} (e_a f)(e_b g)
  NConnection N{x2 * v, 0.3 * x1, y4 * 0.1, v};
  const Series fg = star(f, g, th, N, p), gf = star(g, f, th, N, p);
  std::complex<double> expect = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      expect += std::complex<double>(0, th.direction(a, b)) * n_elongated(f, N, p, a) * n_elongated(g, N, p, b);
  CHECK(std::abs(fg.c[1] - gf.c[1] - expect) <= 1e-13);
  // constants act as scalars
  const Series cf = star(3.0, f, th, N, p);
  CHECK(std::abs(cf.c[0] - 3.0 * f(p)) <= 1e-14);
  CHECK(std::abs(cf.c[1]) + std::abs(cf.c[2]) <= 1e-14);
}

TEST_CASE("bilinearity") {
  const ThetaTensor th = sample_theta(0.5);
  NConnection N{x2, 0.0, 0.0, x1 * v};
  const ScalarField f = x1 * x1 * v, g = sin(x2 + y4), h = exp(v) * x1;
  const Point p(0.2, 0.7, -0.3, 0.5);
  const Series lhs = star(2.0 * f + h, g, th, N, p);
  const Series rhs = star(f, g, th, N, p) * std::complex<double>(2.0) + star(h, g, th, N, p);
  CHECK(series_diff(lhs, rhs) <= 1e-12);
}

TEST_CASE("associativity") {
  const ThetaTensor th = sample_theta(1.0);
  const Point p(0.3, -0.2, 0.9, 1.1);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(-1, 1);
  auto quad = [&]() {
    ScalarField r = U(rng);
    for (int a = 0; a < 4; ++a) {
      r = r + U(rng) * coords[a];
      for (int b = a; b < 4; ++b) r = r + U(rng) * coords[a] * coords[b];
    }
    return r;
  };
  for (int t = 0; t < 5; ++t) CHECK(associativity_defect(quad(), quad(), quad(), th, NConnection{}, p) <= 1e-10);
  CHECK(associativity_defect(sin(x1), exp(x2), v * y4, ThetaTensor{}, NConnection{}, p) == 0.0);
  const double s = 1e-2;
  const double d = associativity_defect(sin(x1 * x2), exp(x2 - v), cos(v + y4) * x1, sample_theta(s), NConnection{}, p);
  CHECK(d <= 1e-6);
}

TEST_CASE("N-elongated star reduces to Moyal on y-independent fields") {
  const ThetaTensor th = sample_theta(0.3);
  const NConnection N{x1 * v, x2, y4, 0.5};
  const ScalarField f = sin(x1) * x2, g = exp(x1 - x2);
  const Point p(0.1, 0.2, 0.3, 0.4);
  CHECK(series_diff(star(f, g, th, N, p), star(f, g, th, NConnection{}, p)) <= 1e-14);
}

TEST_CASE("frame deformations") {
  FrameExpansion fe = FrameExpansion::identity();
  const Point p(0.1, 0.2, 0.3, 0.4);
  const SeriesMatrix m = deform_frame(fe, p);
  CHECK(m[2][2].c[0] == 1.0);
  CHECK(m[2][1].c[0] == 0.0);
  fe.first[0][1] = x1 + v;
  const SeriesMatrix d = deform_frame(fe, p);
  CHECK(d[0][1].c[1] == std::complex<double>(0.0, 0.4));
  // real part even in theta
  for (double t : {0.1, 0.3}) CHECK(d[0][1].value(t).real() == doctest::Approx(d[0][1].value(-t).real()));

  const ThetaTensor th = sample_theta(1.0);
  const FrameExpansion id = FrameExpansion::identity();
  CHECK(frame_duality(id, id, th, NConnection{}, p).max() == 0.0);
  FrameExpansion bad = id;
  bad.first[1][2] = 0.3 + x1;
  const DualityDefect dd = frame_duality(id, bad, th, NConnection{}, p);
  CHECK(dd.by_order[0] == 0.0);
  CHECK(dd.by_order[1] > 0.1);
  // a consistent first-order pair: e = 1 + i t A, dual = 1 - i t A^T for constant A
  FrameExpansion e = id, du = id;
  e.first[0][1] = 0.5;
  du.first[1][0] = -0.5;
  const DualityDefect ok = frame_duality(e, du, th, NConnection{}, p);
  CHECK(ok.by_order[0] == 0.0);
  CHECK(ok.by_order[1] <= 1e-15);
}

TEST_CASE("metric from frames") {
  DMetric d;
  d.g1 = -(1.0 + x1 * x1);
  d.g2 = -exp(x2);
  d.h3 = -(2.0 + sin(v));
  d.h4 = 1.0 + x1 * x1 * 0.1;
  d.N = NConnection{x2 * v, 0.3, x1, v * 0.2};
  const Point p(0.3, 0.4, 0.5, 0.6);
  const Eigen::Vector4d eta(-1, -1, -1, 1);
  const FrameExpansion fe = frame_from_dmetric(d);
  const SeriesMatrix g0 = metric_from_frames(fe, eta, ThetaTensor{}, NConnection{}, p);
  const Eigen::Matrix4d ref = assemble(d, p);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      CHECK(std::abs(g0[a][b].c[0] - ref(a, b)) <= 1e-14);
      CHECK(std::abs(g0[a][b].c[1]) + std::abs(g0[a][b].c[2]) == 0.0);
    }

  // imaginary first corrections feed only real theta^2 terms
  FrameExpansion def = FrameExpansion::identity();
  def.first[0][0] = x1;
  def.first[2][3] = 0.5 * v;
  def.second[1][1] = x2;
  const SeriesMatrix g = metric_from_frames(def, eta, ThetaTensor{}, NConnection{}, p);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      CHECK(std::abs(g[a][b].c[1]) <= 1e-15);
      CHECK(std::abs(g[a][b].c[2].imag()) <= 1e-15);
      CHECK(std::abs(g[a][b].c[0] - g[b][a].c[0]) <= 1e-15);
    }
  CHECK(g[0][0].c[2].real() == doctest::Approx(-(0.3 * 0.3)));
  CHECK(g[1][1].c[2].real() == doctest::Approx(-0.8));

  // with theta the symmetrized result stays real through order 2
  const SeriesMatrix gt = metric_from_frames(def, eta, sample_theta(1.0), NConnection{}, p);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int k = 0; k < 3; ++k) CHECK(std::abs(gt[a][b].c[k].imag()) <= 1e-14);
}
