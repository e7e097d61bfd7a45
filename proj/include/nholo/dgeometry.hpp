#pragma once

#include <Eigen/Core>

#include <array>

#include "nholo/fields.hpp"
#include "nholo/nconnection.hpp"

namespace nholo {

using Signs = std::array<int, 4>;

// Distinguished metric g = g_i dx^i dx^i + h_a e^a e^a, e^a = dy^a + N_i^a dx^i.
struct DMetric {
  ScalarField g1, g2, h3, h4;
  NConnection N;
  Signs eps{-1, -1, -1, 1};

  const ScalarField& coefficient(int alpha) const {
    switch (alpha) {
      case 0: return g1;
      case 1: return g2;
      case 2: return h3;
      default: return h4;
    }
  }
};

// Symmetric 4x4 field; ten independent components.
class CoordinateMetric {
 public:
  CoordinateMetric() = default;
  const ScalarField& operator()(int a, int b) const { return c_[slot(a, b)]; }
  ScalarField& operator()(int a, int b) { return c_[slot(a, b)]; }

 private:
  static int slot(int a, int b) {
    if (a > b) std::swap(a, b);
    return a * 4 - a * (a - 1) / 2 + (b - a);
  }
  std::array<ScalarField, 10> c_;
};

// g_ij = g_i d_ij + sum_a h_a N_i^a N_j^a, g_ia = h_a N_i^a, g_ab = h_a d_ab.
template <typename Scalar>
std::array<std::array<Scalar, 4>, 4> assemble_components(const std::array<Scalar, 4>& diag,
                                                         const std::array<std::array<Scalar, 2>, 2>& n) {
  std::array<std::array<Scalar, 4>, 4> g;
  for (auto& row : g) row.fill(Scalar(0.0));
  for (int a = 0; a < 2; ++a) g[2 + a][2 + a] = diag[2 + a];
  for (int i = 0; i < 2; ++i) {
    for (int j = i; j < 2; ++j) {
      Scalar s = i == j ? diag[i] : Scalar(0.0);
      for (int a = 0; a < 2; ++a) s = s + diag[2 + a] * n[i][a] * n[j][a];
      g[i][j] = s;
      g[j][i] = s;
    }
    for (int a = 0; a < 2; ++a) {
      g[i][2 + a] = diag[2 + a] * n[i][a];
      g[2 + a][i] = g[i][2 + a];
    }
  }
  return g;
}

CoordinateMetric coordinate_metric(const DMetric& d);
CoordinateMetric diagonal_metric(const ScalarField& g00, const ScalarField& g11,
                                 const ScalarField& g22, const ScalarField& g33);

Eigen::Matrix4d assemble(const DMetric& d, const Point& p);
Eigen::Matrix4d metric_value(const CoordinateMetric& g, const Point& p);

struct Anholonomy {
  // w[i][a][b] = dN_i^b / dy^a for i in {x1,x2}, a, b in {v,y4}
  double w[2][2][2];
  // omega[a][i][j] = e_j(N_i^a) - e_i(N_j^a)
  double omega[2][2][2];
};

Anholonomy anholonomy(const NConnection& N, const Point& p);

// N-adapted frame e_alpha and coframe e^alpha as coordinate matrices.
Eigen::Matrix4d n_adapted_frame(const NConnection& N, const Point& p);
Eigen::Matrix4d n_adapted_coframe(const NConnection& N, const Point& p);

// max |e^alpha(e_beta) - delta^alpha_beta|
double dual_frame_check(const DMetric& d, const Point& p);

// gamma[a](b, c) = Gamma^a_{bc}
using Christoffel = std::array<Eigen::Matrix4d, 4>;

Christoffel lc_connection(const CoordinateMetric& g, const Point& p, const DiffOptions& opt = {});
Eigen::Matrix4d lc_ricci(const CoordinateMetric& g, const Point& p, const DiffOptions& opt = {});
Eigen::Matrix4d lc_einstein(const CoordinateMetric& g, const Point& p, const DiffOptions& opt = {});

// Throws DegenerateMetric when |det g| < 1e-14 * scale.
void check_nondegenerate(const Eigen::Matrix4d& g);

}  // namespace nholo
