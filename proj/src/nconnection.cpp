#include "nholo/nconnection.hpp"

#include <stdexcept>

namespace nholo {

double n_elongated(const ScalarField& f, const NConnection& N, const Point& p, int alpha) {
  if (alpha < 0 || alpha >= kDim) throw std::out_of_range("frame index must be in 0..3");
  f.check_domain(p);
  Evaluator e(p);
  const Jet<1> df = e.jet<1>(f);
  const double d = df.derivative(MultiIndex{alpha == 0, alpha == 1, alpha == 2, alpha == 3});
  if (alpha >= V) return d;
  return d - e.value(N(alpha, V)) * df.derivative({0, 0, 1, 0}) -
         e.value(N(alpha, Y4)) * df.derivative({0, 0, 0, 1});
}

ScalarField n_elongated_field(const ScalarField& f, const NConnection& N, int alpha) {
  if (alpha < 0 || alpha >= kDim) throw std::out_of_range("frame index must be in 0..3");
  if (alpha >= V) return derivative(f, alpha);
  return derivative(f, alpha) - N(alpha, V) * derivative(f, V) - N(alpha, Y4) * derivative(f, Y4);
}

}  // namespace nholo
