#include "sigk/expr.hpp"

#include <cctype>
#include <cmath>
#include <sstream>
#include <vector>

#include "sigk/errors.hpp"

namespace sigk {

enum class Op { kConst, kVar, kAdd, kSub, kMul, kDiv, kPow, kNeg, kFunc };
enum class Fn { kSin, kCos, kTan, kExp, kLog, kSqrt, kSinh, kCosh, kTanh };

struct Expr::Node {
  Op op = Op::kConst;
  double value = 0.0;
  ExprVar var;
  Fn fn = Fn::kSin;
  std::shared_ptr<const Node> a;
  std::shared_ptr<const Node> b;
};

namespace {

using NodeP = std::shared_ptr<const Expr::Node>;

NodeP make_const(double c) {
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::kConst;
  n->value = c;
  return n;
}

bool is_const(const NodeP& n, double c) { return n->op == Op::kConst && n->value == c; }

NodeP make_var(ExprVar v) {
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::kVar;
  n->var = v;
  return n;
}

double apply(Fn f, double x) {
  switch (f) {
    case Fn::kSin: return std::sin(x);
    case Fn::kCos: return std::cos(x);
    case Fn::kTan: return std::tan(x);
    case Fn::kExp: return std::exp(x);
    case Fn::kLog: return std::log(x);
    case Fn::kSqrt: return std::sqrt(x);
    case Fn::kSinh: return std::sinh(x);
    case Fn::kCosh: return std::cosh(x);
    case Fn::kTanh: return std::tanh(x);
  }
  return NAN;
}

double eval_node(const Expr::Node& n, const Vec& x, double z, const Vec& xi);

NodeP make_binary(Op op, NodeP a, NodeP b) {
  // Constant folding and unit/zero rules keep derivative trees small.
  if (a->op == Op::kConst && b->op == Op::kConst) {
    Expr::Node tmp;
    tmp.op = op;
    tmp.a = a;
    tmp.b = b;
    return make_const(eval_node(tmp, Vec(), 0.0, Vec()));
  }
  switch (op) {
    case Op::kAdd:
      if (is_const(a, 0.0)) return b;
      if (is_const(b, 0.0)) return a;
      break;
    case Op::kSub:
      if (is_const(b, 0.0)) return a;
      break;
    case Op::kMul:
      if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
      if (is_const(a, 1.0)) return b;
      if (is_const(b, 1.0)) return a;
      break;
    case Op::kDiv:
      if (is_const(a, 0.0)) return make_const(0.0);
      if (is_const(b, 1.0)) return a;
      break;
    case Op::kPow:
      if (is_const(b, 0.0)) return make_const(1.0);
      if (is_const(b, 1.0)) return a;
      break;
    default:
      break;
  }
  auto n = std::make_shared<Expr::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodeP make_neg(NodeP a) {
  if (a->op == Op::kConst) return make_const(-a->value);
  if (a->op == Op::kNeg) return a->a;
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::kNeg;
  n->a = std::move(a);
  return n;
}

NodeP make_func(Fn f, NodeP a) {
  if (a->op == Op::kConst) return make_const(apply(f, a->value));
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::kFunc;
  n->fn = f;
  n->a = std::move(a);
  return n;
}

double eval_node(const Expr::Node& n, const Vec& x, double z, const Vec& xi) {
  switch (n.op) {
    case Op::kConst: return n.value;
    case Op::kVar:
      switch (n.var.kind) {
        case ExprVar::Kind::kX: return x(n.var.index);
        case ExprVar::Kind::kZ: return z;
        case ExprVar::Kind::kXi: return xi(n.var.index);
      }
      return NAN;
    case Op::kAdd: return eval_node(*n.a, x, z, xi) + eval_node(*n.b, x, z, xi);
    case Op::kSub: return eval_node(*n.a, x, z, xi) - eval_node(*n.b, x, z, xi);
    case Op::kMul: return eval_node(*n.a, x, z, xi) * eval_node(*n.b, x, z, xi);
    case Op::kDiv: return eval_node(*n.a, x, z, xi) / eval_node(*n.b, x, z, xi);
    case Op::kPow: {
      const double e = eval_node(*n.b, x, z, xi);
      const double base = eval_node(*n.a, x, z, xi);
      if (e == 2.0) return base * base;
      return std::pow(base, e);
    }
    case Op::kNeg: return -eval_node(*n.a, x, z, xi);
    case Op::kFunc: return apply(n.fn, eval_node(*n.a, x, z, xi));
  }
  return NAN;
}

bool same_var(const ExprVar& a, const ExprVar& b) { return a.kind == b.kind && a.index == b.index; }

NodeP diff_node(const NodeP& n, const ExprVar& v) {
  switch (n->op) {
    case Op::kConst: return make_const(0.0);
    case Op::kVar: return make_const(same_var(n->var, v) ? 1.0 : 0.0);
    case Op::kAdd: return make_binary(Op::kAdd, diff_node(n->a, v), diff_node(n->b, v));
    case Op::kSub: return make_binary(Op::kSub, diff_node(n->a, v), diff_node(n->b, v));
    case Op::kMul:
      return make_binary(Op::kAdd, make_binary(Op::kMul, diff_node(n->a, v), n->b),
                         make_binary(Op::kMul, n->a, diff_node(n->b, v)));
    case Op::kDiv: {
      // (a'b - ab') / b^2
      NodeP num = make_binary(Op::kSub, make_binary(Op::kMul, diff_node(n->a, v), n->b),
                              make_binary(Op::kMul, n->a, diff_node(n->b, v)));
      return make_binary(Op::kDiv, num, make_binary(Op::kMul, n->b, n->b));
    }
    case Op::kPow: {
      const NodeP da = diff_node(n->a, v);
      if (n->b->op == Op::kConst) {
        const double c = n->b->value;
        return make_binary(Op::kMul,
                           make_binary(Op::kMul, make_const(c),
                                       make_binary(Op::kPow, n->a, make_const(c - 1.0))),
                           da);
      }
      // a^b (b' log a + b a'/a)
      const NodeP db = diff_node(n->b, v);
      NodeP inner = make_binary(Op::kAdd, make_binary(Op::kMul, db, make_func(Fn::kLog, n->a)),
                                make_binary(Op::kDiv, make_binary(Op::kMul, n->b, da), n->a));
      return make_binary(Op::kMul, n, inner);
    }
    case Op::kNeg: return make_neg(diff_node(n->a, v));
    case Op::kFunc: {
      const NodeP da = diff_node(n->a, v);
      if (is_const(da, 0.0)) return da;
      NodeP outer;
      switch (n->fn) {
        case Fn::kSin: outer = make_func(Fn::kCos, n->a); break;
        case Fn::kCos: outer = make_neg(make_func(Fn::kSin, n->a)); break;
        case Fn::kTan: {
          NodeP c = make_func(Fn::kCos, n->a);
          outer = make_binary(Op::kDiv, make_const(1.0), make_binary(Op::kMul, c, c));
          break;
        }
        case Fn::kExp: outer = n; break;
        case Fn::kLog: outer = make_binary(Op::kDiv, make_const(1.0), n->a); break;
        case Fn::kSqrt: outer = make_binary(Op::kDiv, make_const(0.5), n); break;
        case Fn::kSinh: outer = make_func(Fn::kCosh, n->a); break;
        case Fn::kCosh: outer = make_func(Fn::kSinh, n->a); break;
        case Fn::kTanh: {
          NodeP c = make_func(Fn::kCosh, n->a);
          outer = make_binary(Op::kDiv, make_const(1.0), make_binary(Op::kMul, c, c));
          break;
        }
      }
      return make_binary(Op::kMul, outer, da);
    }
  }
  return make_const(0.0);
}

bool depends(const NodeP& n, const ExprVar& v) {
  if (!n) return false;
  if (n->op == Op::kVar) return same_var(n->var, v);
  return depends(n->a, v) || depends(n->b, v);
}

const char* fn_name(Fn f) {
  switch (f) {
    case Fn::kSin: return "sin";
    case Fn::kCos: return "cos";
    case Fn::kTan: return "tan";
    case Fn::kExp: return "exp";
    case Fn::kLog: return "log";
    case Fn::kSqrt: return "sqrt";
    case Fn::kSinh: return "sinh";
    case Fn::kCosh: return "cosh";
    case Fn::kTanh: return "tanh";
  }
  return "?";
}

void print(const NodeP& n, std::ostream& os) {
  switch (n->op) {
    case Op::kConst: {
      std::ostringstream t;
      t.precision(17);
      t << n->value;
      os << t.str();
      return;
    }
    case Op::kVar:
      if (n->var.kind == ExprVar::Kind::kZ) {
        os << "z";
      } else {
        os << (n->var.kind == ExprVar::Kind::kX ? "x" : "xi") << n->var.index + 1;
      }
      return;
    case Op::kNeg:
      os << "(-";
      print(n->a, os);
      os << ")";
      return;
    case Op::kFunc:
      os << fn_name(n->fn) << "(";
      print(n->a, os);
      os << ")";
      return;
    default: {
      const char* sym = n->op == Op::kAdd   ? "+"
                        : n->op == Op::kSub ? "-"
                        : n->op == Op::kMul ? "*"
                        : n->op == Op::kDiv ? "/"
                                            : "^";
      os << "(";
      print(n->a, os);
      os << sym;
      print(n->b, os);
      os << ")";
    }
  }
}

class Parser {
 public:
  Parser(const std::string& text, int n) : s_(text), n_(n) {}

  NodeP run() {
    NodeP e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression '" + s_ + "' at column " + std::to_string(pos_ + 1) + ": " + what);
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

  NodeP expr() {
    NodeP a = term();
    for (;;) {
      if (accept('+')) {
        a = make_binary(Op::kAdd, a, term());
      } else if (accept('-')) {
        a = make_binary(Op::kSub, a, term());
      } else {
        return a;
      }
    }
  }

  NodeP term() {
    NodeP a = unary();
    for (;;) {
      if (accept('*')) {
        a = make_binary(Op::kMul, a, unary());
      } else if (accept('/')) {
        a = make_binary(Op::kDiv, a, unary());
      } else {
        return a;
      }
    }
  }

  NodeP unary() {
    if (accept('-')) return make_neg(unary());
    if (accept('+')) return unary();
    return power();
  }

  NodeP power() {
    NodeP base = primary();
    if (accept('^')) return make_binary(Op::kPow, base, unary());
    return base;
  }

  NodeP sum_of_squares(ExprVar::Kind kind) {
    NodeP acc = make_const(0.0);
    for (int i = 0; i < n_; ++i) {
      NodeP v = make_var({kind, i});
      acc = make_binary(Op::kAdd, acc, make_binary(Op::kMul, v, v));
    }
    return acc;
  }

  NodeP primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodeP e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("malformed number");
      }
      pos_ += used;
      return make_const(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string word = s_.substr(start, pos_ - start);
      std::size_t dstart = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string digits = s_.substr(dstart, pos_ - dstart);
      if (!digits.empty()) {
        const int idx = std::stoi(digits) - 1;
        if (idx < 0 || idx >= n_) fail("variable index out of range in '" + word + digits + "'");
        if (word == "x") return make_var({ExprVar::Kind::kX, idx});
        if (word == "xi") return make_var({ExprVar::Kind::kXi, idx});
        fail("unknown name '" + word + digits + "'");
      }
      if (word == "z") return make_var({ExprVar::Kind::kZ, 0});
      if (word == "pi") return make_const(M_PI);
      if (word == "xsq") return sum_of_squares(ExprVar::Kind::kX);
      if (word == "xisq") return sum_of_squares(ExprVar::Kind::kXi);
      static const std::pair<const char*, Fn> kFns[] = {
          {"sin", Fn::kSin},   {"cos", Fn::kCos},   {"tan", Fn::kTan},
          {"exp", Fn::kExp},   {"log", Fn::kLog},   {"sqrt", Fn::kSqrt},
          {"sinh", Fn::kSinh}, {"cosh", Fn::kCosh}, {"tanh", Fn::kTanh}};
      for (const auto& [name, fn] : kFns) {
        if (word == name) {
          if (!accept('(')) fail("expected '(' after " + word);
          NodeP arg = expr();
          if (!accept(')')) fail("expected ')'");
          return make_func(fn, arg);
        }
      }
      fail("unknown name '" + word + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string s_;
  int n_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr::Expr() : node_(make_const(0.0)) {}

Expr Expr::parse(const std::string& text, int n) { return Expr(Parser(text, n).run()); }
Expr Expr::constant(double c) { return Expr(make_const(c)); }
Expr Expr::variable(ExprVar v) { return Expr(make_var(v)); }

double Expr::eval(const Vec& x, double z, const Vec& xi) const { return eval_node(*node_, x, z, xi); }
Expr Expr::diff(ExprVar v) const { return Expr(diff_node(node_, v)); }

std::string Expr::str() const {
  std::ostringstream os;
  print(node_, os);
  return os.str();
}

bool Expr::is_constant() const { return node_->op == Op::kConst; }
bool Expr::depends_on(ExprVar v) const { return depends(node_, v); }

Expr operator+(const Expr& a, const Expr& b) { return Expr(make_binary(Op::kAdd, a.node_, b.node_)); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(make_binary(Op::kSub, a.node_, b.node_)); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(make_binary(Op::kMul, a.node_, b.node_)); }
Expr operator/(const Expr& a, const Expr& b) { return Expr(make_binary(Op::kDiv, a.node_, b.node_)); }
Expr operator-(const Expr& a) { return Expr(make_neg(a.node_)); }

}  // namespace sigk
