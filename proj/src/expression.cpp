#include "nholo/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>

namespace nholo {

namespace {

class Parser {
 public:
  Parser(const std::string& s, const ParamMap& params, int line)
      : s_(s), params_(params), line_(line) {}

  ScalarField parse() {
    ScalarField r = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
    return r;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what + " at line " + std::to_string(line_) + ", column " +
                         std::to_string(pos_ + 1),
                     line_, static_cast<int>(pos_ + 1));
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  ScalarField expr() {
    ScalarField r = term();
    for (;;) {
      if (accept('+')) r = r + term();
      else if (accept('-')) r = r - term();
      else return r;
    }
  }

  ScalarField term() {
    ScalarField r = unary();
    for (;;) {
      if (accept('*')) r = r * unary();
      else if (accept('/')) r = r / unary();
      else return r;
    }
  }

  ScalarField unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  ScalarField power() {
    ScalarField base = atom();
    if (accept('^')) return pow(base, unary());
    return base;
  }

  ScalarField atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[pos_];
    if (accept('(')) {
      ScalarField r = expr();
      if (!accept(')')) fail("expected ')'");
      return r;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  ScalarField number() {
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double x = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    return ScalarField(x);
  }

  ScalarField name() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    const std::string id = s_.substr(start, pos_ - start);
    if (accept('(')) {
      ScalarField arg = expr();
      if (!accept(')')) fail("expected ')' after argument of " + id);
      if (id == "exp") return exp(arg);
      if (id == "ln" || id == "log") return log(arg);
      if (id == "sin") return sin(arg);
      if (id == "cos") return cos(arg);
      if (id == "sinh") return sinh(arg);
      if (id == "cosh") return cosh(arg);
      if (id == "sech") return sech(arg);
      if (id == "sqrt") return sqrt(arg);
      if (id == "abs") return abs(arg);
      pos_ = start;
      fail("unknown function '" + id + "'");
    }
    if (id == "x1") return ScalarField::coordinate(X1);
    if (id == "x2") return ScalarField::coordinate(X2);
    if (id == "v") return ScalarField::coordinate(V);
    if (id == "y4") return ScalarField::coordinate(Y4);
    if (id == "pi") return ScalarField(std::numbers::pi);
    if (id == "e") return ScalarField(std::numbers::e);
    auto it = params_.find(id);
    if (it != params_.end()) return ScalarField::parameter(id, it->second);
    if (id == "theta" || id == "thetabar") return ScalarField::parameter(id, 0.0);
    pos_ = start;
    fail("unknown name '" + id + "'");
  }

  const std::string& s_;
  const ParamMap& params_;
  int line_;
  std::size_t pos_ = 0;
};

}  // namespace

ScalarField parse_expression(const std::string& text, const ParamMap& params, int line) {
  return Parser(text, params, line).parse();
}

}  // namespace nholo
