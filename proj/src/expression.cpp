#include "rbsde/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <vector>

#include "rbsde/error.hpp"

namespace rbsde {

struct Expression::Node {
  enum class Op { Const, Time, W, N, Neg, Add, Sub, Mul, Div, Pow, Exp, Log, Sqrt, Abs, Min, Max };
  Op op = Op::Const;
  double value = 0.0;
  int index = 0;
  std::vector<std::shared_ptr<const Node>> args;

  double eval(const NodeState& s) const {
    auto a = [&](std::size_t i) { return args[i]->eval(s); };
    switch (op) {
      case Op::Const: return value;
      case Op::Time: return s.t;
      case Op::W: return s.w[static_cast<std::size_t>(index)];
      case Op::N: return static_cast<double>(s.jumps[static_cast<std::size_t>(index)]);
      case Op::Neg: return -a(0);
      case Op::Add: return a(0) + a(1);
      case Op::Sub: return a(0) - a(1);
      case Op::Mul: return a(0) * a(1);
      case Op::Div: return a(0) / a(1);
      case Op::Pow: return std::pow(a(0), a(1));
      case Op::Exp: return std::exp(a(0));
      case Op::Log: return std::log(a(0));
      case Op::Sqrt: return std::sqrt(a(0));
      case Op::Abs: return std::abs(a(0));
      case Op::Min: return std::min(a(0), a(1));
      case Op::Max: return std::max(a(0), a(1));
    }
    return 0.0;
  }

  bool constant() const {
    if (op == Op::Time || op == Op::W || op == Op::N) return false;
    for (const auto& c : args)
      if (!c->constant()) return false;
    return true;
  }
};

namespace {

using Node = Expression::Node;
using Ptr = std::shared_ptr<const Node>;
using Op = Node::Op;

class Parser {
 public:
  Parser(const std::string& text, int p, int d) : s_(text), p_(p), d_(d) {}

  Ptr run() {
    auto e = sum();
    skip();
    if (i_ != s_.size()) fail("unexpected '" + std::string(1, s_[i_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::ConfigError,
                "expression \"" + s_ + "\" at offset " + std::to_string(i_) + ": " + what);
  }
  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool eat(char c) {
    skip();
    if (i_ < s_.size() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }
  static Ptr make(Op op, std::vector<Ptr> args = {}, double v = 0.0, int idx = 0) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->args = std::move(args);
    n->value = v;
    n->index = idx;
    return n;
  }

  Ptr sum() {
    auto lhs = product();
    for (;;) {
      if (eat('+')) lhs = make(Op::Add, {lhs, product()});
      else if (eat('-')) lhs = make(Op::Sub, {lhs, product()});
      else return lhs;
    }
  }
  Ptr product() {
    auto lhs = unary();
    for (;;) {
      if (eat('*')) lhs = make(Op::Mul, {lhs, unary()});
      else if (eat('/')) lhs = make(Op::Div, {lhs, unary()});
      else return lhs;
    }
  }
  Ptr unary() {
    if (eat('-')) return make(Op::Neg, {unary()});
    if (eat('+')) return unary();
    return power();
  }
  // Right associative; binds tighter than unary minus on its left.
  Ptr power() {
    auto base = primary();
    if (eat('^')) return make(Op::Pow, {base, unary()});
    return base;
  }
  Ptr primary() {
    skip();
    if (i_ >= s_.size()) fail("unexpected end");
    if (eat('(')) {
      auto e = sum();
      if (!eat(')')) fail("missing ')'");
      return e;
    }
    const char c = s_[i_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return name();
    fail("unexpected '" + std::string(1, c) + "'");
  }
  Ptr number() {
    const char* begin = s_.c_str() + i_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("bad number");
    i_ += static_cast<std::size_t>(end - begin);
    return make(Op::Const, {}, v);
  }
  Ptr name() {
    const auto start = i_;
    while (i_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[i_]))) ++i_;
    const std::string id = s_.substr(start, i_ - start);
    if (id == "t") return make(Op::Time);
    if (id == "pi") return make(Op::Const, {}, std::numbers::pi);
    if (id == "e") return make(Op::Const, {}, std::numbers::e);
    if ((id[0] == 'W' || id[0] == 'N') && id.size() > 1 &&
        id.find_first_not_of("0123456789", 1) == std::string::npos) {
      const int idx = std::stoi(id.substr(1)) - 1;
      const int lim = id[0] == 'W' ? p_ : d_;
      if (idx < 0 || idx >= lim) fail("variable " + id + " out of range");
      return make(id[0] == 'W' ? Op::W : Op::N, {}, 0.0, idx);
    }
    static const std::pair<const char*, Op> unary_fns[] = {
        {"exp", Op::Exp}, {"log", Op::Log}, {"sqrt", Op::Sqrt}, {"abs", Op::Abs}};
    for (const auto& [fn, op] : unary_fns)
      if (id == fn) {
        if (!eat('(')) fail("expected '(' after " + id);
        auto a = sum();
        if (!eat(')')) fail("missing ')'");
        return make(op, {a});
      }
    if (id == "min" || id == "max") {
      if (!eat('(')) fail("expected '(' after " + id);
      auto a = sum();
      if (!eat(',')) fail("expected ','");
      auto b = sum();
      if (!eat(')')) fail("missing ')'");
      return make(id == "min" ? Op::Min : Op::Max, {a, b});
    }
    fail("unknown name '" + id + "'");
  }

  const std::string& s_;
  std::size_t i_ = 0;
  int p_;
  int d_;
};

}  // namespace

Expression Expression::parse(const std::string& text, int brownian_dim, int jump_channels) {
  Expression e;
  e.root_ = Parser(text, brownian_dim, jump_channels).run();
  e.text_ = text;
  return e;
}

Expression Expression::constant(double value) {
  auto n = std::make_shared<Node>();
  n->value = value;
  Expression e;
  e.root_ = n;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  e.text_ = buf;
  return e;
}

double Expression::operator()(const NodeState& s) const { return root_ ? root_->eval(s) : 0.0; }

bool Expression::is_constant() const { return !root_ || root_->constant(); }

}  // namespace rbsde
