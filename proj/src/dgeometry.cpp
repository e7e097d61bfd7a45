#include "nholo/dgeometry.hpp"

#include <Eigen/LU>

#include <cmath>

namespace nholo {

CoordinateMetric coordinate_metric(const DMetric& d) {
  const std::array<ScalarField, 4> diag{d.g1, d.g2, d.h3, d.h4};
  const std::array<std::array<ScalarField, 2>, 2> n{{{d.N.w1, d.N.n1}, {d.N.w2, d.N.n2}}};
  const auto c = assemble_components(diag, n);
  CoordinateMetric g;
  for (int a = 0; a < 4; ++a)
    for (int b = a; b < 4; ++b) g(a, b) = c[a][b];
  return g;
}

CoordinateMetric diagonal_metric(const ScalarField& g00, const ScalarField& g11,
                                 const ScalarField& g22, const ScalarField& g33) {
  CoordinateMetric g;
  g(0, 0) = g00;
  g(1, 1) = g11;
  g(2, 2) = g22;
  g(3, 3) = g33;
  return g;
}

void check_nondegenerate(const Eigen::Matrix4d& g) {
  const double scale = std::pow(g.cwiseAbs().maxCoeff(), 4);
  const double det = g.determinant();
  if (!(std::abs(det) >= 1e-14 * scale) || scale == 0.0)
    throw DegenerateMetric("metric determinant " + std::to_string(det) + " is degenerate");
}

Eigen::Matrix4d assemble(const DMetric& d, const Point& p) {
  Evaluator e(p);
  const std::array<double, 4> diag{e.value(d.g1), e.value(d.g2), e.value(d.h3), e.value(d.h4)};
  const std::array<std::array<double, 2>, 2> n{
      {{e.value(d.N.w1), e.value(d.N.n1)}, {e.value(d.N.w2), e.value(d.N.n2)}}};
  const auto c = assemble_components(diag, n);
  Eigen::Matrix4d g;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) g(a, b) = c[a][b];
  check_nondegenerate(g);
  return g;
}

Eigen::Matrix4d metric_value(const CoordinateMetric& g, const Point& p) {
  Evaluator e(p);
  Eigen::Matrix4d m;
  for (int a = 0; a < 4; ++a)
    for (int b = a; b < 4; ++b) m(a, b) = m(b, a) = e.value(g(a, b));
  return m;
}

Anholonomy anholonomy(const NConnection& N, const Point& p) {
  Evaluator e(p);
  Jet<1> n[2][2];
  for (int i = 0; i < 2; ++i)
    for (int a = 0; a < 2; ++a) n[i][a] = e.jet<1>(N(i, V + a));
  auto d = [](const Jet<1>& j, int c) { return j.c[MonomialTable<1>::get().index({c == 0, c == 1, c == 2, c == 3})]; };

  Anholonomy r{};
  for (int i = 0; i < 2; ++i)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) r.w[i][a][b] = d(n[i][b], V + a);

  // e_j(N_i^a) = d_j N_i^a - N_j^b d_b N_i^a
  auto elong = [&](int j, int i, int a) {
    double s = d(n[i][a], j);
    for (int b = 0; b < 2; ++b) s -= n[j][b].value() * d(n[i][a], V + b);
    return s;
  };
  for (int a = 0; a < 2; ++a)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r.omega[a][i][j] = elong(j, i, a) - elong(i, j, a);
  return r;
}

Eigen::Matrix4d n_adapted_frame(const NConnection& N, const Point& p) {
  // columns are e_alpha in the coordinate basis: e_i = d_i - N_i^a d_a
  Evaluator e(p);
  Eigen::Matrix4d E = Eigen::Matrix4d::Identity();
  for (int i = 0; i < 2; ++i)
    for (int a = 0; a < 2; ++a) E(V + a, i) = -e.value(N(i, V + a));
  return E;
}

Eigen::Matrix4d n_adapted_coframe(const NConnection& N, const Point& p) {
  // rows are e^alpha: e^a = dy^a + N_i^a dx^i
  Evaluator e(p);
  Eigen::Matrix4d D = Eigen::Matrix4d::Identity();
  for (int i = 0; i < 2; ++i)
    for (int a = 0; a < 2; ++a) D(V + a, i) = e.value(N(i, V + a));
  return D;
}

double dual_frame_check(const DMetric& d, const Point& p) {
  const Eigen::Matrix4d prod = n_adapted_coframe(d.N, p) * n_adapted_frame(d.N, p);
  return (prod - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff();
}

namespace {

struct MetricJets {
  Eigen::Matrix4d g;
  std::array<Eigen::Matrix4d, 4> dg;                 // dg[m](a,b) = d_m g_ab
  std::array<std::array<Eigen::Matrix4d, 4>, 4> ddg;  // ddg[m][n](a,b)
};

MetricJets metric_jets(const CoordinateMetric& g, const Point& p, const DiffOptions& opt, bool second) {
  JetSource src(p, opt);
  MetricJets m;
  for (int a = 0; a < 4; ++a)
    for (int b = a; b < 4; ++b) {
      Jet<2> j;
      if (second) {
        j = src.jet<2>(g(a, b));
      } else {
        const Jet<1> j1 = src.jet<1>(g(a, b));
        for (int n = 0; n < Jet<1>::size; ++n) j.c[n] = j1.c[n];
      }
      m.g(a, b) = m.g(b, a) = j.value();
      for (int r = 0; r < 4; ++r) {
        MultiIndex e{0, 0, 0, 0};
        e[r] = 1;
        m.dg[r](a, b) = m.dg[r](b, a) = j.derivative(e);
        for (int s = 0; s < 4; ++s) {
          MultiIndex f = e;
          f[s] += 1;
          m.ddg[r][s](a, b) = m.ddg[r][s](b, a) = second ? j.derivative(f) : 0.0;
        }
      }
    }
  check_nondegenerate(m.g);
  return m;
}

// Christoffel symbols of the first kind [s; b c] = (d_b g_sc + d_c g_sb - d_s g_bc) / 2
double first_kind(const std::array<Eigen::Matrix4d, 4>& dg, int s, int b, int c) {
  return 0.5 * (dg[b](s, c) + dg[c](s, b) - dg[s](b, c));
}

Christoffel christoffel(const Eigen::Matrix4d& ginv, const std::array<Eigen::Matrix4d, 4>& dg) {
  Christoffel G;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = b; c < 4; ++c) {
        double s = 0.0;
        for (int q = 0; q < 4; ++q) s += ginv(a, q) * first_kind(dg, q, b, c);
        G[a](b, c) = G[a](c, b) = s;
      }
  return G;
}

}  // namespace

Christoffel lc_connection(const CoordinateMetric& g, const Point& p, const DiffOptions& opt) {
  const MetricJets m = metric_jets(g, p, opt, false);
  return christoffel(m.g.inverse(), m.dg);
}

Eigen::Matrix4d lc_ricci(const CoordinateMetric& g, const Point& p, const DiffOptions& opt) {
  const MetricJets m = metric_jets(g, p, opt, true);
  const Eigen::Matrix4d ginv = m.g.inverse();
  const Christoffel G = christoffel(ginv, m.dg);

  // d_m Gamma^a_{bc} = (d_m g^{aq}) [q; b c] + g^{aq} d_m [q; b c]
  std::array<Christoffel, 4> dG;
  for (int r = 0; r < 4; ++r) {
    const Eigen::Matrix4d dginv = -ginv * m.dg[r] * ginv;
    std::array<Eigen::Matrix4d, 4> ddg_r;
    for (int s = 0; s < 4; ++s) ddg_r[s] = m.ddg[r][s];
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int c = b; c < 4; ++c) {
          double s = 0.0;
          for (int q = 0; q < 4; ++q)
            s += dginv(a, q) * first_kind(m.dg, q, b, c) + ginv(a, q) * first_kind(ddg_r, q, b, c);
          dG[r][a](b, c) = dG[r][a](c, b) = s;
        }
  }

  // R_bn = d_a G^a_nb - d_n G^a_ab + G^a_al G^l_nb - G^a_nl G^l_ab
  Eigen::Matrix4d R = Eigen::Matrix4d::Zero();
  for (int b = 0; b < 4; ++b)
    for (int n = b; n < 4; ++n) {
      double s = 0.0;
      for (int a = 0; a < 4; ++a) {
        s += dG[a][a](n, b) - dG[n][a](a, b);
        for (int l = 0; l < 4; ++l) s += G[a](a, l) * G[l](n, b) - G[a](n, l) * G[l](a, b);
      }
      R(b, n) = R(n, b) = s;
    }
  return R;
}

Eigen::Matrix4d lc_einstein(const CoordinateMetric& g, const Point& p, const DiffOptions& opt) {
  const Eigen::Matrix4d R = lc_ricci(g, p, opt);
  const Eigen::Matrix4d gv = metric_value(g, p);
  const double scalar = (gv.inverse() * R).trace();
  return R - 0.5 * scalar * gv;
}

}  // namespace nholo
