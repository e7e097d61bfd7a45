#include "nholo/fields.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "nholo/quadrature.hpp"

namespace nholo {

namespace {

std::atomic<std::uint64_t> g_next_id{1};

NodePtr make(Node n) {
  n.id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return std::make_shared<const Node>(std::move(n));
}

NodePtr make_const(double c) {
  Node n;
  n.op = Op::Const;
  n.value = c;
  return make(std::move(n));
}

bool is_const(const NodePtr& n, double c) { return n->op == Op::Const && n->value == c; }

NodePtr unary(Op op, const NodePtr& a, double value = 0.0) {
  Node n;
  n.op = op;
  n.a = a;
  n.value = value;
  n.deps = a->deps;
  return make(std::move(n));
}

NodePtr binary(Op op, const NodePtr& a, const NodePtr& b) {
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  n.deps = a->deps | b->deps;
  return make(std::move(n));
}

double apply_const(Op op, double x, double p = 0.0) {
  switch (op) {
    case Op::Neg: return -x;
    case Op::Exp: return std::exp(x);
    case Op::Log: return std::log(x);
    case Op::Sin: return std::sin(x);
    case Op::Cos: return std::cos(x);
    case Op::Sinh: return std::sinh(x);
    case Op::Cosh: return std::cosh(x);
    case Op::Sech: return 1.0 / std::cosh(x);
    case Op::Sqrt: return std::sqrt(x);
    case Op::Abs: return std::abs(x);
    case Op::Pow: return std::pow(x, p);
    default: return x;
  }
}

ScalarField fold_unary(Op op, const ScalarField& f, double p = 0.0) {
  const auto& n = f.node();
  if (n->op == Op::Const) return ScalarField(apply_const(op, n->value, p));
  return ScalarField(unary(op, n, p));
}

// ---------------------------------------------------------------------------
// Line-cached antiderivatives

struct LineKey {
  std::uint64_t id;
  double x1, x2, y4;
  bool operator==(const LineKey& o) const {
    return id == o.id && x1 == o.x1 && x2 == o.x2 && y4 == o.y4;
  }
};

struct LineKeyHash {
  std::size_t operator()(const LineKey& k) const {
    std::hash<double> h;
    std::size_t s = std::hash<std::uint64_t>()(k.id);
    for (double x : {k.x1, k.x2, k.y4}) s ^= h(x) + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
    return s;
  }
};

template <int K>
struct LineData {
  std::vector<Jet<K>> up{Jet<K>()};
  std::vector<Jet<K>> down{Jet<K>()};
};

constexpr std::size_t kMaxCachedLines = 8192;

template <int K>
std::unordered_map<LineKey, LineData<K>, LineKeyHash>& line_cache() {
  thread_local std::unordered_map<LineKey, LineData<K>, LineKeyHash> cache;
  return cache;
}

template <std::size_t... I>
void clear_all(std::index_sequence<I...>) {
  (line_cache<I>().clear(), ...);
}

}  // namespace

// ---------------------------------------------------------------------------
// Evaluation

struct Evaluator::Memo {
  Point p;
  std::unordered_map<std::uint64_t, std::size_t> index;  // offset into store
  std::vector<double> store;
};

namespace {

template <int K>
Jet<K> eval_node(const Node& n, Evaluator::Memo& m);

template <int K>
Jet<K> child_jet_at(const Node& child, Point q) {
  Evaluator::Memo m{q, {}, {}};
  return eval_node<K>(child, m);
}

template <int K>
Jet<K> integrate_line(const Node& child, const Point& p, double a, double b) {
  auto f = [&](double v) {
    Point q = p;
    q[V] = v;
    return child_jet_at<K>(child, q);
  };
  return adaptive_quadrature<Jet<K>>(f, a, b);
}

// Cumulative integral of the child's jet from v0 to p[V].
template <int K>
Jet<K> cumulative(const Node& n, const Point& p) {
  const Node& child = *n.a;
  const double v0 = n.value;
  const double v = p[V];
  if (n.step <= 0.0) return integrate_line<K>(child, p, v0, v);

  auto& cache = line_cache<K>();
  if (cache.size() > kMaxCachedLines) cache.clear();
  LineData<K>& line = cache[LineKey{n.id, p[X1], p[X2], p[Y4]}];

  const double dv = n.step;
  const double t = (v - v0) / dv;
  if (std::abs(t) > 1e7) throw Error("integration point too far from base for breakpoint cache");
  const bool forward = t >= 0.0;
  std::vector<Jet<K>>& cum = forward ? line.up : line.down;
  const double dir = forward ? 1.0 : -1.0;
  const double at = std::abs(t);
  long k = std::lround(at);
  const bool snapped = std::abs(at - static_cast<double>(k)) < 1e-10;
  if (!snapped) k = static_cast<long>(std::floor(at));

  while (static_cast<long>(cum.size()) <= k) {
    const long j = static_cast<long>(cum.size()) - 1;
    const double a = v0 + dir * dv * static_cast<double>(j);
    const double b = v0 + dir * dv * static_cast<double>(j + 1);
    cum.push_back(cum.back() + integrate_line<K>(child, p, a, b));
  }
  if (snapped) return cum[k];
  return cum[k] + integrate_line<K>(child, p, v0 + dir * dv * static_cast<double>(k), v);
}

template <int K>
Jet<K> eval_integral(const Node& n, Evaluator::Memo& m) {
  Jet<K> r;
  const auto& tab = MonomialTable<K>::get();
  if constexpr (K > 0) {
    const Jet<K - 1> cj = eval_node<K - 1>(*n.a, m);
    for (int i = 0; i < Jet<K>::size; ++i) {
      MultiIndex e = tab.exps[i];
      const int mv = e[V];
      if (mv == 0) continue;
      e[V] -= 1;
      r.c[i] = cj.coeff(e) / mv;
    }
  }
  const Jet<K> base = cumulative<K>(n, m.p);
  for (int i = 0; i < Jet<K>::size; ++i)
    if (tab.exps[i][V] == 0) r.c[i] = base.c[i];
  return r;
}

template <int K>
Jet<K> eval_uncached(const Node& n, Evaluator::Memo& m) {
  switch (n.op) {
    case Op::Const:
    case Op::Param: return Jet<K>(n.value);
    case Op::Var: return Jet<K>::variable(n.index, m.p[n.index]);
    case Op::Add: return eval_node<K>(*n.a, m) + eval_node<K>(*n.b, m);
    case Op::Sub: return eval_node<K>(*n.a, m) - eval_node<K>(*n.b, m);
    case Op::Mul: {
      if (n.a->op == Op::Const) return eval_node<K>(*n.b, m) * n.a->value;
      if (n.b->op == Op::Const) return eval_node<K>(*n.a, m) * n.b->value;
      return eval_node<K>(*n.a, m) * eval_node<K>(*n.b, m);
    }
    case Op::Div: {
      const Jet<K> den = eval_node<K>(*n.b, m);
      if (den.value() == 0.0) throw ZeroDenominator("division by a vanishing field value");
      return eval_node<K>(*n.a, m) / den;
    }
    case Op::Neg: return -eval_node<K>(*n.a, m);
    case Op::Pow: return pow(eval_node<K>(*n.a, m), n.value);
    case Op::Exp: return exp(eval_node<K>(*n.a, m));
    case Op::Log: return log(eval_node<K>(*n.a, m));
    case Op::Sin: return sin(eval_node<K>(*n.a, m));
    case Op::Cos: return cos(eval_node<K>(*n.a, m));
    case Op::Sinh: return sinh(eval_node<K>(*n.a, m));
    case Op::Cosh: return cosh(eval_node<K>(*n.a, m));
    case Op::Sech: return sech(eval_node<K>(*n.a, m));
    case Op::Sqrt: return sqrt(eval_node<K>(*n.a, m));
    case Op::Abs: return abs(eval_node<K>(*n.a, m));
    case Op::Deriv:
      if constexpr (K < kMaxJetOrder) {
        return eval_node<K + 1>(*n.a, m).partial(n.index);
      } else {
        throw UnsupportedOrder("nested derivatives exceed the maximal jet order");
      }
    case Op::IntegralV: return eval_integral<K>(n, m);
    case Op::Apply: {
      const Jet<K> u = eval_node<K>(*n.a, m);
      std::array<double, K + 1> t;
      n.fn->taylor(u.value(), K, t.data());
      return compose(u, t.data());
    }
    case Op::Opaque: return fd_jet<K>(*n.opaque, m.p, n.step);
  }
  throw Error("unknown node");
}

bool memoizable(Op op) {
  switch (op) {
    case Op::Const:
    case Op::Param:
    case Op::Var:
    case Op::Neg: return false;
    default: return true;
  }
}

template <int K>
Jet<K> eval_node(const Node& n, Evaluator::Memo& m) {
  if (!memoizable(n.op)) return eval_uncached<K>(n, m);
  const std::uint64_t key = n.id * 8 + K;
  auto it = m.index.find(key);
  if (it != m.index.end()) {
    Jet<K> r;
    std::copy_n(m.store.begin() + static_cast<std::ptrdiff_t>(it->second), Jet<K>::size, r.c.begin());
    return r;
  }
  Jet<K> r = eval_uncached<K>(n, m);
  m.index.emplace(key, m.store.size());
  m.store.insert(m.store.end(), r.c.begin(), r.c.end());
  return r;
}

// 1-d central difference weights for the k-th derivative, offsets in units of h.
const std::vector<std::pair<int, double>>& stencil(int k) {
  static const std::vector<std::vector<std::pair<int, double>>> s = {
      {{0, 1.0}},
      {{-1, -0.5}, {1, 0.5}},
      {{-1, 1.0}, {0, -2.0}, {1, 1.0}},
      {{-2, -0.5}, {-1, 1.0}, {1, -1.0}, {2, 0.5}},
      {{-2, 1.0}, {-1, -4.0}, {0, 6.0}, {1, -4.0}, {2, 1.0}},
  };
  if (k > 4) throw UnsupportedOrder("finite differences support derivative order <= 4");
  return s[k];
}

}  // namespace

template <int K>
Jet<K> fd_jet(const std::function<double(const Point&)>& f, const Point& p, double h) {
  const auto& tab = MonomialTable<K>::get();
  std::map<std::array<int, kDim>, double> values;
  auto value_at = [&](const std::array<int, kDim>& off) {
    auto it = values.find(off);
    if (it != values.end()) return it->second;
    Point q = p;
    for (int i = 0; i < kDim; ++i) q[i] += off[i] * h;
    const double v = f(q);
    values.emplace(off, v);
    return v;
  };
  Jet<K> r;
  for (int n = 0; n < Jet<K>::size; ++n) {
    const MultiIndex& e = tab.exps[n];
    const auto& s0 = stencil(e[0]);
    const auto& s1 = stencil(e[1]);
    const auto& s2 = stencil(e[2]);
    const auto& s3 = stencil(e[3]);
    double acc = 0.0;
    for (auto [o0, w0] : s0)
      for (auto [o1, w1] : s1)
        for (auto [o2, w2] : s2)
          for (auto [o3, w3] : s3) acc += w0 * w1 * w2 * w3 * value_at({o0, o1, o2, o3});
    double scale = std::pow(h, tab.degree[n]);
    for (int q = 0; q < kDim; ++q) scale *= factorial(e[q]);
    r.c[n] = acc / scale;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Evaluator

Evaluator::Evaluator(const Point& p) : p_(p), memo_(std::make_unique<Memo>()) { memo_->p = p; }
Evaluator::~Evaluator() = default;

template <int K>
Jet<K> Evaluator::jet(const ScalarField& f) {
  return eval_node<K>(*f.node(), *memo_);
}

template <int K>
Jet<K> JetSource::jet(const ScalarField& f) {
  if (opt_.backend == Backend::Dual) return eval_.jet<K>(f);
  return fd_jet<K>([&f](const Point& q) { return f(q); }, eval_.point(), opt_.step);
}

template <int K>
Jet<K> ScalarField::jet(const Point& p) const {
  Evaluator e(p);
  return e.jet<K>(*this);
}

#define NHOLO_INSTANTIATE(K)                                                                  \
  template Jet<K> Evaluator::jet<K>(const ScalarField&);                                     \
  template Jet<K> JetSource::jet<K>(const ScalarField&);                                     \
  template Jet<K> ScalarField::jet<K>(const Point&) const;                                   \
  template Jet<K> fd_jet<K>(const std::function<double(const Point&)>&, const Point&, double);
NHOLO_INSTANTIATE(0)
NHOLO_INSTANTIATE(1)
NHOLO_INSTANTIATE(2)
NHOLO_INSTANTIATE(3)
NHOLO_INSTANTIATE(4)
#undef NHOLO_INSTANTIATE

template Jet<5> Evaluator::jet<5>(const ScalarField&);
template Jet<5> ScalarField::jet<5>(const Point&) const;

void clear_line_caches() { clear_all(std::make_index_sequence<kMaxJetOrder + 1>()); }

// ---------------------------------------------------------------------------
// ScalarField construction

ScalarField::ScalarField() : node_(make_const(0.0)) {}
ScalarField::ScalarField(double c) : node_(make_const(c)) {}

ScalarField ScalarField::coordinate(int coord) {
  if (coord < 0 || coord >= kDim) throw std::out_of_range("coordinate index");
  Node n;
  n.op = Op::Var;
  n.index = coord;
  n.deps = 1u << coord;
  return ScalarField(make(std::move(n)));
}

ScalarField ScalarField::parameter(const std::string& name, double value) {
  Node n;
  n.op = Op::Param;
  n.name = name;
  n.value = value;
  return ScalarField(make(std::move(n)));
}

ScalarField ScalarField::opaque(OpaqueFn fn, double fd_step) {
  Node n;
  n.op = Op::Opaque;
  n.opaque = std::make_shared<const OpaqueFn>(std::move(fn));
  n.step = fd_step;
  n.deps = 0xFu;
  return ScalarField(make(std::move(n)));
}

ScalarField ScalarField::apply(std::shared_ptr<const UnivariateFunction> fn, const ScalarField& arg) {
  Node n;
  n.op = Op::Apply;
  n.fn = std::move(fn);
  n.a = arg.node();
  n.deps = arg.node()->deps;
  n.name = n.fn->name();
  return ScalarField(make(std::move(n)));
}

double ScalarField::operator()(const Point& p) const {
  Evaluator e(p);
  return e.value(*this);
}

std::optional<double> ScalarField::constant_value() const {
  if (node_->op == Op::Const || node_->op == Op::Param) return node_->value;
  return std::nullopt;
}

ScalarField ScalarField::restrict_domain(int coord, double lo, double hi) const {
  ScalarField r = *this;
  auto d = domain_ ? std::make_shared<std::array<Interval, kDim>>(*domain_)
                   : std::make_shared<std::array<Interval, kDim>>();
  (*d)[coord] = Interval{lo, hi};
  r.domain_ = d;
  return r;
}

void ScalarField::check_domain(const Point& p) const {
  if (!domain_) return;
  static const char* names[] = {"x1", "x2", "v", "y4"};
  for (int i = 0; i < kDim; ++i)
    if (p[i] < (*domain_)[i].lo || p[i] > (*domain_)[i].hi)
      throw DomainError(i, std::string("coordinate ") + names[i] + " outside field domain");
}

namespace {

template <typename Fn>
NodePtr rebuild(const NodePtr& n, std::unordered_map<const Node*, NodePtr>& done, Fn&& leaf) {
  auto it = done.find(n.get());
  if (it != done.end()) return it->second;
  NodePtr r = leaf(n);
  if (!r) {
    NodePtr a = n->a ? rebuild(n->a, done, leaf) : nullptr;
    NodePtr b = n->b ? rebuild(n->b, done, leaf) : nullptr;
    if (a == n->a && b == n->b) {
      r = n;
    } else {
      Node c = *n;
      c.a = a;
      c.b = b;
      c.deps = (a ? a->deps : 0u) | (b ? b->deps : 0u);
      if (c.op == Op::IntegralV) c.deps |= 1u << V;
      if (c.op == Op::Opaque) c.deps = 0xFu;
      r = make(std::move(c));
    }
  }
  done.emplace(n.get(), r);
  return r;
}

}  // namespace

ScalarField ScalarField::with_params(const ParamMap& params) const {
  std::unordered_map<const Node*, NodePtr> done;
  ScalarField r(rebuild(node_, done, [&](const NodePtr& n) -> NodePtr {
    if (n->op != Op::Param) return nullptr;
    auto it = params.find(n->name);
    if (it == params.end() || it->second == n->value) return n;
    Node c = *n;
    c.value = it->second;
    return make(std::move(c));
  }));
  r.domain_ = domain_;
  return r;
}

ScalarField ScalarField::substitute(int coord, const ScalarField& replacement) const {
  std::unordered_map<const Node*, NodePtr> done;
  ScalarField r(rebuild(node_, done, [&](const NodePtr& n) -> NodePtr {
    if (!((n->deps >> coord) & 1u)) return n;
    if (n->op == Op::Var) return replacement.node();
    if ((n->op == Op::Deriv && n->index == coord) || (n->op == Op::IntegralV && coord == V) ||
        n->op == Op::Opaque)
      throw Error("cannot substitute a coordinate inside a derivative, integral or opaque node");
    return nullptr;
  }));
  return r;
}

namespace {

void print(const Node& n, std::ostringstream& os) {
  static const char* vars[] = {"x1", "x2", "v", "y4"};
  auto fn = [&](const char* name) {
    os << name << '(';
    print(*n.a, os);
    os << ')';
  };
  auto bin = [&](const char* sym) {
    os << '(';
    print(*n.a, os);
    os << ' ' << sym << ' ';
    print(*n.b, os);
    os << ')';
  };
  switch (n.op) {
    case Op::Const: os << n.value; break;
    case Op::Param: os << n.name; break;
    case Op::Var: os << vars[n.index]; break;
    case Op::Add: bin("+"); break;
    case Op::Sub: bin("-"); break;
    case Op::Mul: bin("*"); break;
    case Op::Div: bin("/"); break;
    case Op::Neg: os << "(-"; print(*n.a, os); os << ')'; break;
    case Op::Pow: os << '('; print(*n.a, os); os << ")^" << n.value; break;
    case Op::Exp: fn("exp"); break;
    case Op::Log: fn("ln"); break;
    case Op::Sin: fn("sin"); break;
    case Op::Cos: fn("cos"); break;
    case Op::Sinh: fn("sinh"); break;
    case Op::Cosh: fn("cosh"); break;
    case Op::Sech: fn("sech"); break;
    case Op::Sqrt: fn("sqrt"); break;
    case Op::Abs: fn("abs"); break;
    case Op::Deriv: os << "d_" << vars[n.index] << '['; print(*n.a, os); os << ']'; break;
    case Op::IntegralV: os << "int_v[" << n.value << "]("; print(*n.a, os); os << ')'; break;
    case Op::Apply: fn(n.name.c_str()); break;
    case Op::Opaque: os << "<opaque>"; break;
  }
}

}  // namespace

std::string ScalarField::to_string() const {
  std::ostringstream os;
  os.precision(17);
  print(*node_, os);
  return os.str();
}

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  const auto &x = a.node(), &y = b.node();
  if (x->op == Op::Const && y->op == Op::Const) return ScalarField(x->value + y->value);
  if (is_const(x, 0.0)) return b;
  if (is_const(y, 0.0)) return a;
  return ScalarField(binary(Op::Add, x, y));
}

ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  const auto &x = a.node(), &y = b.node();
  if (x->op == Op::Const && y->op == Op::Const) return ScalarField(x->value - y->value);
  if (is_const(y, 0.0)) return a;
  if (is_const(x, 0.0)) return -b;
  return ScalarField(binary(Op::Sub, x, y));
}

ScalarField operator*(const ScalarField& a, const ScalarField& b) {
  const auto &x = a.node(), &y = b.node();
  if (x->op == Op::Const && y->op == Op::Const) return ScalarField(x->value * y->value);
  if (is_const(x, 0.0) || is_const(y, 0.0)) return ScalarField(0.0);
  if (is_const(x, 1.0)) return b;
  if (is_const(y, 1.0)) return a;
  return ScalarField(binary(Op::Mul, x, y));
}

ScalarField operator/(const ScalarField& a, const ScalarField& b) {
  const auto &x = a.node(), &y = b.node();
  if (is_const(y, 0.0)) throw ZeroDenominator("division by the zero constant");
  if (x->op == Op::Const && y->op == Op::Const) return ScalarField(x->value / y->value);
  if (is_const(x, 0.0)) return ScalarField(0.0);
  if (is_const(y, 1.0)) return a;
  return ScalarField(binary(Op::Div, x, y));
}

ScalarField operator-(const ScalarField& a) { return fold_unary(Op::Neg, a); }

ScalarField exp(const ScalarField& f) { return fold_unary(Op::Exp, f); }
ScalarField log(const ScalarField& f) { return fold_unary(Op::Log, f); }
ScalarField sin(const ScalarField& f) { return fold_unary(Op::Sin, f); }
ScalarField cos(const ScalarField& f) { return fold_unary(Op::Cos, f); }
ScalarField sinh(const ScalarField& f) { return fold_unary(Op::Sinh, f); }
ScalarField cosh(const ScalarField& f) { return fold_unary(Op::Cosh, f); }
ScalarField sech(const ScalarField& f) { return fold_unary(Op::Sech, f); }
ScalarField sqrt(const ScalarField& f) { return fold_unary(Op::Sqrt, f); }
ScalarField abs(const ScalarField& f) { return fold_unary(Op::Abs, f); }

ScalarField pow(const ScalarField& f, double p) {
  if (p == 0.0) return ScalarField(1.0);
  if (p == 1.0) return f;
  return fold_unary(Op::Pow, f, p);
}

ScalarField pow(const ScalarField& f, const ScalarField& p) {
  if (p.node()->op == Op::Const) return pow(f, p.node()->value);
  return exp(p * log(f));
}

namespace {

bool contains_integral(const NodePtr& n, std::unordered_set<const Node*>& seen) {
  if (!n || !(n->deps >> V & 1u) || !seen.insert(n.get()).second) return false;
  if (n->op == Op::IntegralV) return true;
  return contains_integral(n->a, seen) || contains_integral(n->b, seen);
}

ScalarField deriv_node(const ScalarField& f, int coord) {
  Node n;
  n.op = Op::Deriv;
  n.index = coord;
  n.a = f.node();
  n.deps = f.node()->deps;
  return ScalarField(make(std::move(n)));
}

ScalarField derivative_once(const ScalarField& f, int coord);

// Product rule terms, dropping those whose factor is independent of coord.
ScalarField product_rule(const ScalarField& a, const ScalarField& b, int coord) {
  const bool da = a.depends_on(coord), db = b.depends_on(coord);
  if (da && db) return derivative_once(a, coord) * b + a * derivative_once(b, coord);
  if (da) return derivative_once(a, coord) * b;
  return a * derivative_once(b, coord);
}

// Differentiates sums, products and quotients through to any v-antiderivative
// so that d/dv of an integral never needs a line quadrature.
ScalarField derivative_once(const ScalarField& f, int coord) {
  if (!f.depends_on(coord)) return ScalarField(0.0);
  const Node& n = *f.node();
  if (n.op == Op::Var) return ScalarField(1.0);
  if (n.op == Op::IntegralV && coord == V) return ScalarField(n.a);
  std::unordered_set<const Node*> seen;
  if (!contains_integral(f.node(), seen)) return deriv_node(f, coord);
  const ScalarField a(n.a);
  switch (n.op) {
    case Op::Add: return derivative_once(a, coord) + derivative_once(ScalarField(n.b), coord);
    case Op::Sub: return derivative_once(a, coord) - derivative_once(ScalarField(n.b), coord);
    case Op::Neg: return -derivative_once(a, coord);
    case Op::Mul: return product_rule(a, ScalarField(n.b), coord);
    case Op::Div: {
      const ScalarField b(n.b);
      if (!b.depends_on(coord)) return derivative_once(a, coord) / b;
      return (b * derivative_once(a, coord) - a * derivative_once(b, coord)) / (b * b);
    }
    default: return deriv_node(f, coord);
  }
}

}  // namespace

ScalarField derivative(const ScalarField& f, int coord, int times) {
  if (coord < 0 || coord >= kDim) throw std::out_of_range("coordinate index");
  ScalarField r = f;
  for (int t = 0; t < times; ++t) r = derivative_once(r, coord);
  return r;
}

ScalarField integral_v(const ScalarField& integrand, double v0, double breakpoint_step) {
  if (integrand.is_zero()) return ScalarField(0.0);
  Node n;
  n.op = Op::IntegralV;
  n.a = integrand.node();
  n.value = v0;
  n.step = breakpoint_step;
  n.deps = integrand.node()->deps | (1u << V);
  return ScalarField(make(std::move(n)));
}

// ---------------------------------------------------------------------------
// Module operations

double eval(const ScalarField& f, const Point& p, const ParamMap& params) {
  f.check_domain(p);
  if (params.empty()) return f(p);
  return f.with_params(params)(p);
}

namespace {

template <int K>
double partial_k(const ScalarField& f, const Point& p, const MultiIndex& idx) {
  return f.jet<K>(p).derivative(idx);
}

}  // namespace

double partial(const ScalarField& f, const Point& p, const MultiIndex& idx) {
  for (int v : idx)
    if (v < 0) throw std::invalid_argument("negative derivative order");
  f.check_domain(p);
  switch (total_order(idx)) {
    case 0: return f(p);
    case 1: return partial_k<1>(f, p, idx);
    case 2: return partial_k<2>(f, p, idx);
    case 3: return partial_k<3>(f, p, idx);
    case 4: return partial_k<4>(f, p, idx);
    default: throw UnsupportedOrder("partial derivatives are supported up to total order 4");
  }
}

double integrate_v(const ScalarField& f, const Point& p, double v0) {
  const Node& n = *f.node();
  auto g = [&](double v) {
    Point q = p;
    q[V] = v;
    Evaluator::Memo m{q, {}, {}};
    return eval_node<0>(n, m).value();
  };
  return adaptive_quadrature<double>(g, v0, p[V]);
}

}  // namespace nholo
