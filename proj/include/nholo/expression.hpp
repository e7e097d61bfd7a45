#pragma once

#include <string>

#include "nholo/fields.hpp"

namespace nholo {

// Parses the infix mini-language used in scenario files.
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := ('+' | '-') unary | power
//   power  := atom ('^' unary)?
//   atom   := number | name | name '(' expr ')' | '(' expr ')'
//
// Names: coordinates x1 x2 v y4, constants pi e, parameters from `params`
// (theta and thetabar default to 0), functions exp ln log sin cos sinh cosh
// sech sqrt abs. Errors carry the 1-based line and column.
ScalarField parse_expression(const std::string& text, const ParamMap& params = {}, int line = 1);

}  // namespace nholo
