#pragma once

// Truncated multivariate Taylor polynomials in the four chart coordinates.
// A Jet<K> stores c_a = (d^a f)(u0) / a! for every multi-index |a| <= K.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "nholo/errors.hpp"

namespace nholo {

inline constexpr int kDim = 4;
inline constexpr int kMaxJetOrder = 6;

using MultiIndex = std::array<int, kDim>;

constexpr int binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return static_cast<int>(r);
}

constexpr int jet_size(int order) { return binomial(order + kDim, kDim); }

inline int total_order(const MultiIndex& a) { return a[0] + a[1] + a[2] + a[3]; }

inline double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

template <int K>
struct MonomialTable {
  static constexpr int size = jet_size(K);
  struct Product {
    std::uint16_t i, j, k;
  };

  std::array<MultiIndex, size> exps{};
  std::array<int, size> degree{};
  std::vector<int> lookup;  // dense (K+1)^4 table, -1 when |a| > K
  std::vector<Product> products;

  int index(const MultiIndex& a) const {
    for (int v : a)
      if (v < 0 || v > K) return -1;
    return lookup[((a[0] * (K + 1) + a[1]) * (K + 1) + a[2]) * (K + 1) + a[3]];
  }

  static const MonomialTable& get() {
    static const MonomialTable table;
    return table;
  }

 private:
  MonomialTable() {
    const int s = K + 1;
    lookup.assign(s * s * s * s, -1);
    int n = 0;
    for (int d = 0; d <= K; ++d)
      for (int a = d; a >= 0; --a)
        for (int b = d - a; b >= 0; --b)
          for (int c = d - a - b; c >= 0; --c) {
            MultiIndex e{a, b, c, d - a - b - c};
            exps[n] = e;
            degree[n] = d;
            lookup[((a * s + b) * s + c) * s + e[3]] = n;
            ++n;
          }
    for (int i = 0; i < size; ++i)
      for (int j = 0; j < size; ++j) {
        if (degree[i] + degree[j] > K) continue;
        MultiIndex e;
        for (int q = 0; q < kDim; ++q) e[q] = exps[i][q] + exps[j][q];
        products.push_back({static_cast<std::uint16_t>(i), static_cast<std::uint16_t>(j),
                            static_cast<std::uint16_t>(index(e))});
      }
  }
};

template <int K, typename T = double>
class Jet {
 public:
  static constexpr int order = K;
  static constexpr int size = jet_size(K);
  using Table = MonomialTable<K>;

  std::array<T, size> c{};

  Jet() = default;
  explicit Jet(T value) { c[0] = value; }

  static Jet constant(T value) { return Jet(value); }

  static Jet variable(int var, T value) {
    Jet r(value);
    if constexpr (K > 0) {
      MultiIndex e{0, 0, 0, 0};
      e[var] = 1;
      r.c[Table::get().index(e)] = T(1);
    }
    return r;
  }

  T value() const { return c[0]; }

  T coeff(const MultiIndex& a) const {
    const int i = Table::get().index(a);
    return i < 0 ? T(0) : c[i];
  }

  // Partial derivative d^a f at the expansion point.
  T derivative(const MultiIndex& a) const {
    if (total_order(a) > K) throw UnsupportedOrder("derivative order exceeds jet order");
    T r = coeff(a);
    for (int q = 0; q < kDim; ++q) r *= factorial(a[q]);
    return r;
  }

  // Jet of the partial derivative with respect to one coordinate.
  Jet<K - 1, T> partial(int var) const requires(K > 0) {
    Jet<K - 1, T> r;
    const auto& lo = MonomialTable<K - 1>::get();
    const auto& hi = Table::get();
    for (int n = 0; n < Jet<K - 1, T>::size; ++n) {
      MultiIndex e = lo.exps[n];
      e[var] += 1;
      r.c[n] = T(e[var]) * c[hi.index(e)];
    }
    return r;
  }

  template <int L>
  Jet<L, T> truncate() const requires(L <= K) {
    Jet<L, T> r;
    for (int n = 0; n < Jet<L, T>::size; ++n) r.c[n] = c[n];
    return r;
  }

  Jet& operator+=(const Jet& o) {
    for (int n = 0; n < size; ++n) c[n] += o.c[n];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int n = 0; n < size; ++n) c[n] -= o.c[n];
    return *this;
  }
  Jet& operator*=(T s) {
    for (auto& x : c) x *= s;
    return *this;
  }
  Jet& operator+=(T s) {
    c[0] += s;
    return *this;
  }
  Jet operator-() const {
    Jet r;
    for (int n = 0; n < size; ++n) r.c[n] = -c[n];
    return r;
  }
};

template <int K, typename T>
Jet<K, T> operator+(Jet<K, T> a, const Jet<K, T>& b) { return a += b; }
template <int K, typename T>
Jet<K, T> operator-(Jet<K, T> a, const Jet<K, T>& b) { return a -= b; }
template <int K, typename T>
Jet<K, T> operator*(Jet<K, T> a, T s) { return a *= s; }
template <int K, typename T>
Jet<K, T> operator*(T s, Jet<K, T> a) { return a *= s; }
template <int K, typename T>
Jet<K, T> operator+(Jet<K, T> a, T s) { return a += s; }
template <int K, typename T>
Jet<K, T> operator-(Jet<K, T> a, T s) { return a += -s; }

template <int K, typename T>
Jet<K, T> operator*(const Jet<K, T>& a, const Jet<K, T>& b) {
  Jet<K, T> r;
  for (const auto& p : MonomialTable<K>::get().products) r.c[p.k] += a.c[p.i] * b.c[p.j];
  return r;
}

// f(u) from the univariate Taylor coefficients t[k] = f^(k)(u0)/k!, u0 = u.value().
template <int K, typename T, typename S>
Jet<K, T> compose(const Jet<K, T>& u, const S* t) {
  Jet<K, T> delta = u;
  delta.c[0] = T(0);
  Jet<K, T> r{static_cast<T>(t[K])};
  for (int k = K - 1; k >= 0; --k) {
    r = r * delta;
    r.c[0] += T(t[k]);
  }
  return r;
}

namespace series {

inline void exp(double x, int n, double* t) {
  const double e = std::exp(x);
  for (int k = 0; k <= n; ++k) t[k] = e / factorial(k);
}

inline void log(double x, int n, double* t) {
  t[0] = std::log(x);
  double p = 1.0;
  for (int k = 1; k <= n; ++k) {
    p /= x;
    t[k] = ((k % 2) ? 1.0 : -1.0) * p / k;
  }
}

inline void sin(double x, int n, double* t) {
  const double d[4] = {std::sin(x), std::cos(x), -std::sin(x), -std::cos(x)};
  for (int k = 0; k <= n; ++k) t[k] = d[k % 4] / factorial(k);
}

inline void cos(double x, int n, double* t) {
  const double d[4] = {std::cos(x), -std::sin(x), -std::cos(x), std::sin(x)};
  for (int k = 0; k <= n; ++k) t[k] = d[k % 4] / factorial(k);
}

inline void sinh(double x, int n, double* t) {
  const double d[2] = {std::sinh(x), std::cosh(x)};
  for (int k = 0; k <= n; ++k) t[k] = d[k % 2] / factorial(k);
}

inline void cosh(double x, int n, double* t) {
  const double d[2] = {std::cosh(x), std::sinh(x)};
  for (int k = 0; k <= n; ++k) t[k] = d[k % 2] / factorial(k);
}

// (1+δ/x)^p expansion of x^p; integer p allows negative x.
inline void pow(double x, double p, int n, double* t) {
  double binom = 1.0;
  for (int k = 0; k <= n; ++k) {
    t[k] = binom * std::pow(x, p - k);
    binom *= (p - k) / (k + 1);
  }
}

}  // namespace series

template <int K, typename T>
Jet<K, T> reciprocal(const Jet<K, T>& u) {
  const T x = u.value();
  std::array<T, K + 1> t;
  T p = T(1) / x;
  for (int k = 0; k <= K; ++k) {
    t[k] = (k % 2 ? -p : p);
    p /= x;
  }
  return compose(u, t.data());
}

template <int K, typename T>
Jet<K, T> operator/(const Jet<K, T>& a, const Jet<K, T>& b) { return a * reciprocal(b); }
template <int K, typename T>
Jet<K, T> operator/(Jet<K, T> a, T s) { return a *= T(1) / s; }
template <int K, typename T>
Jet<K, T> operator/(T s, const Jet<K, T>& b) { return reciprocal(b) * s; }

#define NHOLO_JET_UNARY(name)                  \
  template <int K>                             \
  Jet<K> name(const Jet<K>& u) {               \
    std::array<double, K + 1> t;               \
    series::name(u.value(), K, t.data());      \
    return compose(u, t.data());               \
  }

NHOLO_JET_UNARY(exp)
NHOLO_JET_UNARY(sin)
NHOLO_JET_UNARY(cos)
NHOLO_JET_UNARY(sinh)
NHOLO_JET_UNARY(cosh)
#undef NHOLO_JET_UNARY

template <int K>
Jet<K> log(const Jet<K>& u) {
  if (!(u.value() > 0.0)) throw Error("log of non-positive value");
  std::array<double, K + 1> t;
  series::log(u.value(), K, t.data());
  return compose(u, t.data());
}

template <int K>
Jet<K> pow(const Jet<K>& u, double p) {
  const double x = u.value();
  const bool integral = std::floor(p) == p;
  if (x < 0.0 && !integral) throw Error("non-integer power of negative value");
  if (x == 0.0 && !(integral && p >= 0.0)) throw Error("singular power at zero");
  std::array<double, K + 1> t;
  series::pow(x, p, K, t.data());
  return compose(u, t.data());
}

template <int K>
Jet<K> sqrt(const Jet<K>& u) {
  if (u.value() < 0.0) throw Error("sqrt of negative value");
  if (u.value() == 0.0 && K > 0) throw NonDifferentiable("sqrt is not differentiable at 0");
  return pow(u, 0.5);
}

template <int K>
Jet<K> sech(const Jet<K>& u) { return reciprocal(cosh(u)); }

// |u| needs a sign certificate: the kink at zero is never differentiated.
template <int K>
Jet<K> abs(const Jet<K>& u) {
  if (u.value() > 0.0) return u;
  if (u.value() < 0.0) return -u;
  if constexpr (K == 0) return u;
  throw NonDifferentiable("abs differentiated at a zero of its argument");
}

}  // namespace nholo
