#pragma once

#include "nholo/fields.hpp"

namespace nholo {

// N-connection coefficients N_i^3 = w_i and N_i^4 = n_i.
struct NConnection {
  ScalarField w1, w2, n1, n2;

  // N_i^a with i in {0,1} (x1, x2) and a in {2,3} (v, y4).
  const ScalarField& operator()(int i, int a) const {
    if (a == V) return i == 0 ? w1 : w2;
    return i == 0 ? n1 : n2;
  }

  bool is_zero() const { return w1.is_zero() && w2.is_zero() && n1.is_zero() && n2.is_zero(); }
};

// N-elongated derivative e_alpha f; alpha is the 0-based frame index.
double n_elongated(const ScalarField& f, const NConnection& N, const Point& p, int alpha);

// Symbolic form of e_alpha f as a field.
ScalarField n_elongated_field(const ScalarField& f, const NConnection& N, int alpha);

}  // namespace nholo
