#include "nholo/finsler.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

#include "nholo/errors.hpp"

namespace nholo {

namespace {

constexpr int kY[2] = {V, Y4};
constexpr int kX[2] = {X1, X2};

template <int K>
double d(const Jet<K>& j, std::initializer_list<int> coords) {
  MultiIndex m{0, 0, 0, 0};
  for (int c : coords) ++m[c];
  return j.derivative(m);
}

Eigen::Vector2d fiber(const Point& p) { return {p[V], p[Y4]}; }

void require_slit(const Point& p) {
  if (fiber(p).norm() == 0.0) throw DegenerateFinsler("Finsler data requested at y = 0");
}

template <int K>
Eigen::Matrix2d hessian_from(const Jet<K>& L) {
  Eigen::Matrix2d f;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) f(a, b) = 0.5 * d(L, {kY[a], kY[b]});
  return f;
}

void require_regular(const Eigen::Matrix2d& f) {
  const double s = f.cwiseAbs().maxCoeff();
  if (!(std::abs(f.determinant()) > 1e-12 * s * s)) throw DegenerateFinsler("Hessian of F^2 is singular");
}

double ratio(double num, double den, const char* what) {
  constexpr double tiny = 1e-14;
  if (std::abs(den) > tiny) return num / den;
  if (std::abs(num) <= tiny) return 1.0;
  throw ZeroDenominator(std::string("zero Cartan coefficient ") + what + " under a nonzero source coefficient");
}

// e with coef e^2 = target - base, signed by s.
double solve_square(double target, double base, double coef, int s, const char* what) {
  const double diff = target - base;
  const double scale = std::max({std::abs(target), std::abs(base), 1e-300});
  if (std::abs(diff) <= 1e-14 * scale) return 0.0;
  if (coef == 0.0) throw NoSolution(std::string(what) + ": zero coefficient with a nonzero defect");
  const double rad = diff / coef;
  if (rad < 0.0) throw NoSolution(std::string(what) + ": negative radicand");
  return (s < 0 ? -1.0 : 1.0) * std::sqrt(rad);
}

}  // namespace

FinslerFunction FinslerFunction::from_split(const ScalarField& f3, const ScalarField& f4) {
  FinslerFunction r(f3 + f4);
  r.F3 = f3;
  r.F4 = f4;
  r.split = true;
  return r;
}

Eigen::Matrix2d hessian(const FinslerFunction& F, const Point& p) {
  require_slit(p);
  const Eigen::Matrix2d f = hessian_from(F.lagrangian().jet<2>(p));
  require_regular(f);
  return f;
}

CartanData cartan(const FinslerFunction& F, const Point& p) {
  require_slit(p);
  const Jet<3> L = F.lagrangian().jet<3>(p);
  const Eigen::Vector2d y = fiber(p);
  CartanData out;
  out.hessian = hessian_from(L);
  require_regular(out.hessian);
  const Eigen::Matrix2d inv = out.hessian.inverse();

  Eigen::Vector2d B;
  Eigen::Matrix2d dB;  // dB(i, j) = d B_i / dy^j
  for (int i = 0; i < 2; ++i) {
    B[i] = -d(L, {kX[i]});
    for (int k = 0; k < 2; ++k) B[i] += d(L, {kY[i], kX[k]}) * y[k];
    for (int j = 0; j < 2; ++j) {
      dB(i, j) = d(L, {kY[i], kX[j]}) - d(L, {kY[j], kX[i]});
      for (int k = 0; k < 2; ++k) dB(i, j) += d(L, {kY[i], kY[j], kX[k]}) * y[k];
    }
  }
  out.spray = 0.25 * inv * B;
  for (int j = 0; j < 2; ++j) {
    Eigen::Matrix2d df;
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) df(b, c) = 0.5 * d(L, {kY[b], kY[c], kY[j]});
    out.N.col(j) = 0.25 * (-inv * df * inv * B + inv * dB.col(j));
  }
  return out;
}

std::array<std::array<ScalarField, 2>, 2> hessian_fields(const FinslerFunction& F) {
  const ScalarField L = F.lagrangian();
  std::array<std::array<ScalarField, 2>, 2> f;
  for (int a = 0; a < 2; ++a)
    for (int b = a; b < 2; ++b) {
      f[a][b] = 0.5 * derivative(derivative(L, kY[a]), kY[b]);
      f[b][a] = f[a][b];
    }
  return f;
}

NConnection cartan_n_fields(const FinslerFunction& F) {
  const ScalarField L = F.lagrangian();
  const auto f = hessian_fields(F);
  const ScalarField det = f[0][0] * f[1][1] - f[0][1] * f[0][1];
  const ScalarField inv[2][2] = {{f[1][1] / det, -f[0][1] / det}, {-f[0][1] / det, f[0][0] / det}};
  ScalarField B[2];
  for (int i = 0; i < 2; ++i) {
    const ScalarField Ly = derivative(L, kY[i]);
    B[i] = -derivative(L, kX[i]);
    for (int k = 0; k < 2; ++k) B[i] = B[i] + derivative(Ly, kX[k]) * ScalarField::coordinate(kY[k]);
  }
  ScalarField N[2][2];
  for (int a = 0; a < 2; ++a) {
    const ScalarField G = 0.25 * (inv[a][0] * B[0] + inv[a][1] * B[1]);
    for (int i = 0; i < 2; ++i) N[a][i] = derivative(G, kY[i]);
  }
  return NConnection{N[0][0], N[0][1], N[1][0], N[1][1]};
}

DMetric sasaki_lift(const FinslerFunction& F) {
  const auto f = hessian_fields(F);
  DMetric m;
  m.g1 = f[0][0];
  m.g2 = f[1][1];
  m.h3 = f[0][0];
  m.h4 = f[1][1];
  m.N = cartan_n_fields(F);
  m.eps = {1, 1, 1, 1};
  return m;
}

Eigen::Matrix4d sasaki_metric(const FinslerFunction& F, const Point& p) {
  const CartanData c = cartan(F, p);
  Eigen::Matrix4d coframe = Eigen::Matrix4d::Identity();
  coframe.bottomLeftCorner<2, 2>() = c.N;
  Eigen::Matrix4d blocks = Eigen::Matrix4d::Zero();
  blocks.topLeftCorner<2, 2>() = c.hessian;
  blocks.bottomRightCorner<2, 2>() = c.hessian;
  return coframe.transpose() * blocks * coframe;
}

double homogeneity_defect(const FinslerFunction& F, const Point& p, const std::vector<double>& lambdas) {
  const double base = F.F(p);
  double worst = 0.0;
  for (double l : lambdas) {
    Point q = p;
    q[V] *= l;
    q[Y4] *= l;
    worst = std::max(worst, std::abs(F.F(q) - std::abs(l) * base));
  }
  return worst;
}

double euler_defect(const FinslerFunction& F, const Point& p) {
  const Jet<1> j = F.F.jet<1>(p);
  return std::abs(p[V] * d(j, {V}) + p[Y4] * d(j, {Y4}) - j.value());
}

double quadratic_defect(const FinslerFunction& F, const Point& p) {
  const Jet<2> L = F.lagrangian().jet<2>(p);
  const Eigen::Vector2d y = fiber(p);
  return std::abs(L.value() - y.dot(hessian_from(L) * y));
}

ThetaCompatibility theta_compatibility(const Eigen::Vector2d& w_ring, const Eigen::Vector2d& cw,
                                       const Eigen::Vector2d& n_ring, const Eigen::Vector2d& cn) {
  ThetaCompatibility t;
  for (int i = 0; i < 2; ++i) {
    t.w_ratio[i] = ratio(w_ring[i], cw[i], i == 0 ? "w_1" : "w_2");
    t.n_ratio[i] = ratio(n_ring[i], cn[i], i == 0 ? "n_1" : "n_2");
    t.theta_i[i] = t.w_ratio[i] * t.w_ratio[i] * t.n_ratio[i] * t.n_ratio[i];
  }
  t.theta = t.theta_i[0];
  t.defect = std::abs(t.theta_i[0] - t.theta_i[1]);
  return t;
}

double vielbein_residual(const Eigen::Matrix4d& E, const Eigen::Vector2d& g_ring, const Eigen::Vector2d& h_ring,
                         const Eigen::Vector2d& g, const Eigen::Vector2d& h) {
  double r = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double gi = g[i] + h[0] * E(2, i) * E(2, i) + h[1] * E(3, i) * E(3, i);
    r = std::max(r, std::abs(g_ring[i] - gi));
  }
  for (int a = 0; a < 2; ++a) {
    const double ha = g[0] * E(0, 2 + a) * E(0, 2 + a) + g[1] * E(1, 2 + a) * E(1, 2 + a) + h[a];
    r = std::max(r, std::abs(h_ring[a] - ha));
  }
  return r;
}

VielbeinSolution vielbein_solve(const Eigen::Vector2d& g_ring, const Eigen::Vector2d& h_ring, const Eigen::Vector2d& g,
                                const Eigen::Vector2d& h, const std::array<int, 4>& signs) {
  VielbeinSolution s;
  s.E(2, 0) = solve_square(g_ring[0], g[0], h[0], signs[0], "g_1");
  s.E(3, 1) = solve_square(g_ring[1], g[1], h[1], signs[1], "g_2");
  s.E(0, 2) = solve_square(h_ring[0], h[0], g[0], signs[2], "h_3");
  s.E(1, 3) = solve_square(h_ring[1], h[1], g[1], signs[3], "h_4");
  s.residual = vielbein_residual(s.E, g_ring, h_ring, g, h);
  return s;
}

TransformState riemann_to_finsler(const DMetric& dm, const FinslerFunction& F, const Point& p,
                                  const TransformOptions& opt) {
  TransformState st;
  st.point = p;
  st.split = F.split;

  try {
    st.g_ring = {dm.g1(p), dm.g2(p)};
    st.h_ring = {dm.h3(p), dm.h4(p)};
    st.w_ring = {dm.N.w1(p), dm.N.w2(p)};
    st.n_ring = {dm.N.n1(p), dm.N.n2(p)};
  } catch (const Error& e) {
    throw TransformError(1, e.what());
  }

  CartanData c;
  try {
    c = cartan(F, p);
  } catch (const Error& e) {
    throw TransformError(2, e.what());
  }
  const double hs = c.hessian.cwiseAbs().maxCoeff();
  if (std::abs(c.hessian(0, 1)) > 1e-12 * hs) throw TransformError(2, "Hessian is not diagonal");
  st.f = {c.hessian(0, 0), c.hessian(1, 1), c.hessian(0, 0), c.hessian(1, 1)};
  st.cw = c.N.row(0).transpose();
  st.cn = c.N.row(1).transpose();

  try {
    st.theta = theta_compatibility(st.w_ring, st.cw, st.n_ring, st.cn);
  } catch (const Error& e) {
    throw TransformError(3, e.what());
  }
  st.theta_residual = st.theta.defect;
  if (!(st.theta.defect <= opt.theta_tol))
    throw TransformError(3, "Theta_1' and Theta_2' disagree", st.theta.defect);
  if (st.theta.theta == 0.0) throw TransformError(3, "Theta vanishes");
  for (int i = 0; i < 2; ++i) st.g[i] = st.theta.w_ratio[i] * st.theta.w_ratio[i] * st.f[i] / st.f[2];
  st.h[1] = st.h_ring[0] / st.theta.theta;
  st.h[0] = st.h[1] * st.theta.theta;
  st.w = st.w_ring;
  st.n = st.n_ring;

  VielbeinSolution vs;
  try {
    vs = vielbein_solve(st.g_ring, st.h_ring, st.g, st.h, opt.offdiag_signs);
  } catch (const Error& e) {
    throw TransformError(4, e.what());
  }
  st.E = vs.E;
  st.vielbein_residual = vs.residual;

  const Eigen::Vector4d block(st.g[0], st.g[1], st.h[0], st.h[1]);
  for (int a = 0; a < 4; ++a) {
    if (block[a] == 0.0) throw TransformError(4, "vanishing intermediate coefficient");
    st.scaling[a] = (opt.diag_signs[a] < 0 ? -1.0 : 1.0) * std::sqrt(std::abs(st.f[a] / block[a]));
    st.scaling_residual = std::max(
        st.scaling_residual, std::abs(std::abs(st.f[a]) - st.scaling[a] * st.scaling[a] * std::abs(block[a])));
  }
  for (int k = 0; k < 4; ++k) st.sign_product *= (opt.offdiag_signs[k] < 0 ? -1 : 1) * (opt.diag_signs[k] < 0 ? -1 : 1);

  Eigen::Matrix2d Nprime, Nring;
  Nprime << st.w[0], st.w[1], st.n[0], st.n[1];
  Nring << st.w_ring[0], st.w_ring[1], st.n_ring[0], st.n_ring[1];
  const Eigen::Matrix2d mapped = st.E.bottomRightCorner<2, 2>() * Nprime * st.E.topLeftCorner<2, 2>();
  st.n_residual = (mapped - Nring).cwiseAbs().maxCoeff();
  return st;
}

}  // namespace nholo
