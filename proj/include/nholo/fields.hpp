#pragma once

// Scalar fields over the chart (x1, x2, v, y4) as immutable expression DAGs
// with exact Taylor-jet differentiation.

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nholo/jet.hpp"

namespace nholo {

using Point = Eigen::Vector4d;
using ParamMap = std::map<std::string, double>;

enum Coord : int { X1 = 0, X2 = 1, V = 2, Y4 = 3 };

// Smooth function of one real variable, supplied through its Taylor coefficients.
class UnivariateFunction {
 public:
  virtual ~UnivariateFunction() = default;
  virtual std::string name() const = 0;
  // out[k] = f^(k)(x) / k! for k = 0..order
  virtual void taylor(double x, int order, double* out) const = 0;
  virtual double value(double x) const {
    double t;
    taylor(x, 0, &t);
    return t;
  }
};

enum class Op : std::uint8_t {
  Const, Var, Param,
  Add, Sub, Mul, Div, Neg, Pow,
  Exp, Log, Sin, Cos, Sinh, Cosh, Sech, Sqrt, Abs,
  Deriv, IntegralV, Apply, Opaque
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;
using OpaqueFn = std::function<double(const Point&)>;

struct Node {
  Op op = Op::Const;
  double value = 0.0;  // constant, parameter value, exponent, integration base
  double step = 0.0;   // fd step (Opaque) or breakpoint spacing (IntegralV)
  int index = 0;       // coordinate for Var and Deriv
  unsigned deps = 0;   // bitmask of coordinates the node depends on
  std::uint64_t id = 0;
  std::string name;
  NodePtr a, b;
  std::shared_ptr<const UnivariateFunction> fn;
  std::shared_ptr<const OpaqueFn> opaque;
};

struct Interval {
  double lo = -INFINITY;
  double hi = INFINITY;
};

class ScalarField {
 public:
  ScalarField();
  ScalarField(double c);  // NOLINT: constants convert implicitly
  explicit ScalarField(NodePtr node) : node_(std::move(node)) {}

  static ScalarField coordinate(int coord);
  static ScalarField parameter(const std::string& name, double value);
  static ScalarField opaque(OpaqueFn fn, double fd_step = 1e-3);
  static ScalarField apply(std::shared_ptr<const UnivariateFunction> fn, const ScalarField& arg);

  double operator()(const Point& p) const;
  template <int K>
  Jet<K> jet(const Point& p) const;

  bool depends_on(int coord) const { return (node_->deps >> coord) & 1u; }
  bool is_zero() const { return node_->op == Op::Const && node_->value == 0.0; }
  std::optional<double> constant_value() const;

  ScalarField with_params(const ParamMap& params) const;
  ScalarField substitute(int coord, const ScalarField& replacement) const;
  ScalarField restrict_domain(int coord, double lo, double hi) const;
  const std::array<Interval, kDim>* domain() const { return domain_.get(); }
  // Throws DomainError naming the first offending coordinate.
  void check_domain(const Point& p) const;

  std::string to_string() const;
  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
  std::shared_ptr<const std::array<Interval, kDim>> domain_;
};

ScalarField operator+(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a, const ScalarField& b);
ScalarField operator*(const ScalarField& a, const ScalarField& b);
ScalarField operator/(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a);

ScalarField exp(const ScalarField& f);
ScalarField log(const ScalarField& f);
ScalarField sin(const ScalarField& f);
ScalarField cos(const ScalarField& f);
ScalarField sinh(const ScalarField& f);
ScalarField cosh(const ScalarField& f);
ScalarField sech(const ScalarField& f);
ScalarField sqrt(const ScalarField& f);
ScalarField abs(const ScalarField& f);
ScalarField pow(const ScalarField& f, double p);
ScalarField pow(const ScalarField& f, const ScalarField& p);

// Symbolic derivative node; evaluated exactly by raising the jet order.
ScalarField derivative(const ScalarField& f, int coord, int times = 1);

// Antiderivative in v from the base v0 at fixed (x1, x2, y4). A positive
// breakpoint step enables cumulative caching along each line.
ScalarField integral_v(const ScalarField& integrand, double v0, double breakpoint_step = 0.0);

// Shares jets of common subexpressions across several fields at one point.
class Evaluator {
 public:
  explicit Evaluator(const Point& p);
  ~Evaluator();
  Evaluator(const Evaluator&) = delete;
  Evaluator& operator=(const Evaluator&) = delete;

  template <int K>
  Jet<K> jet(const ScalarField& f);
  double value(const ScalarField& f) { return jet<0>(f).value(); }
  const Point& point() const { return p_; }

  struct Memo;

 private:
  Point p_;
  std::unique_ptr<Memo> memo_;
};

// Derivative backends for residual evaluation.
enum class Backend { Dual, FiniteDifference };

struct DiffOptions {
  Backend backend = Backend::Dual;
  double step = 1e-3;
};

// Jet from central differences of point values (second-order accurate).
template <int K>
Jet<K> fd_jet(const std::function<double(const Point&)>& f, const Point& p, double h);

// Field jet with the chosen backend, sharing work through an evaluator.
class JetSource {
 public:
  JetSource(const Point& p, DiffOptions opt = {}) : eval_(p), opt_(opt) {}
  template <int K>
  Jet<K> jet(const ScalarField& f);
  double value(const ScalarField& f) { return eval_.value(f); }
  const Point& point() const { return eval_.point(); }
  const DiffOptions& options() const { return opt_; }

 private:
  Evaluator eval_;
  DiffOptions opt_;
};

// Module-level operations.
double eval(const ScalarField& f, const Point& p, const ParamMap& params = {});
double partial(const ScalarField& f, const Point& p, const MultiIndex& idx);
double integrate_v(const ScalarField& f, const Point& p, double v0);

// Drops cached line antiderivatives held by the calling thread.
void clear_line_caches();

}  // namespace nholo
