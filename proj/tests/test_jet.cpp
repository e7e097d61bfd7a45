#include <doctest.h>

#include <cmath>
#include <complex>

#include "nholo/jet.hpp"

using namespace nholo;

TEST_CASE("table sizes match binomial counts") {
  CHECK(Jet<2>::size == 15);
  CHECK(Jet<3>::size == 35);
  CHECK(Jet<4>::size == 70);
  const auto& t = MonomialTable<3>::get();
  for (int i = 0; i < Jet<3>::size; ++i) CHECK(t.index(t.exps[i]) == i);
}

TEST_CASE("product of variables gives mixed derivative") {
  auto x = Jet<3>::variable(0, 2.0);
  auto y = Jet<3>::variable(1, 3.0);
  auto f = x * x * y;
  CHECK(f.value() == doctest::Approx(12.0));
  CHECK(f.derivative({1, 0, 0, 0}) == doctest::Approx(12.0));
  CHECK(f.derivative({2, 1, 0, 0}) == doctest::Approx(2.0));
  CHECK(f.derivative({3, 0, 0, 0}) == doctest::Approx(0.0));
}

TEST_CASE("elementary functions against closed forms") {
  const double a = 0.7, b = -0.4;
  auto x = Jet<4>::variable(0, a);
  auto y = Jet<4>::variable(2, b);
  auto f = exp(x) * sin(y);
  CHECK(f.derivative({2, 0, 2, 0}) == doctest::Approx(-std::exp(a) * std::sin(b)));
  CHECK(f.derivative({1, 0, 3, 0}) == doctest::Approx(-std::exp(a) * std::cos(b)));

  auto g = log(x) / (x * x);
  // d/dx (ln x / x^2) = (1 - 2 ln x) / x^3
  CHECK(g.derivative({1, 0, 0, 0}) == doctest::Approx((1 - 2 * std::log(a)) / (a * a * a)));

  auto s = sech(y);
  const double sech_b = 1.0 / std::cosh(b);
  CHECK(s.derivative({0, 0, 1, 0}) == doctest::Approx(-sech_b * std::tanh(b)));

  auto p = pow(x, 2.5);
  CHECK(p.derivative({3, 0, 0, 0}) == doctest::Approx(2.5 * 1.5 * 0.5 * std::pow(a, -0.5)));

  auto q = sqrt(x);
  CHECK(q.derivative({2, 0, 0, 0}) == doctest::Approx(-0.25 * std::pow(a, -1.5)));
}

TEST_CASE("integer powers of negative values") {
  auto x = Jet<3>::variable(0, -2.0);
  auto c = pow(x, 3.0);
  CHECK(c.value() == doctest::Approx(-8.0));
  CHECK(c.derivative({1, 0, 0, 0}) == doctest::Approx(12.0));
  auto r = pow(x, -2.0);
  CHECK(r.derivative({1, 0, 0, 0}) == doctest::Approx(0.25));
  CHECK_THROWS(pow(x, 0.5));
}

TEST_CASE("abs requires a sign certificate") {
  CHECK(abs(Jet<2>::variable(0, -3.0)).derivative({1, 0, 0, 0}) == -1.0);
  CHECK(abs(Jet<0>(0.0)).value() == 0.0);
  CHECK_THROWS_AS(abs(Jet<1>::variable(0, 0.0)), NonDifferentiable);
}

TEST_CASE("partial shifts coefficients") {
  auto x = Jet<3>::variable(0, 1.5);
  auto v = Jet<3>::variable(2, 0.5);
  auto f = x * x * x * v;
  auto fx = f.partial(0);
  CHECK(fx.value() == doctest::Approx(3 * 1.5 * 1.5 * 0.5));
  CHECK(fx.derivative({1, 0, 1, 0}) == doctest::Approx(6 * 1.5));
}

TEST_CASE("complex coefficients") {
  using C = std::complex<double>;
  auto x = Jet<2, C>::variable(0, C(1.0));
  auto f = x * x * C(0, 1);
  CHECK(f.derivative({2, 0, 0, 0}) == C(0, 2));
}
