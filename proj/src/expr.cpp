#include "sheafq/expr.hpp"

#include <cctype>
#include <cmath>
#include <numbers>

namespace sq {

struct Expr::Node {
  enum Kind { Num, Base, Fiber, Neg, Add, Sub, Mul, Div, Pow, Call } kind;
  double value = 0;
  int var = 0;
  std::string fn;
  std::vector<std::shared_ptr<const Node>> kids;

  double eval(const std::vector<double>& b, const std::vector<double>& f) const {
    switch (kind) {
      case Num: return value;
      case Base: return var < static_cast<int>(b.size()) ? b[var] : 0.0;
      case Fiber: return var < static_cast<int>(f.size()) ? f[var] : 0.0;
      case Neg: return -kids[0]->eval(b, f);
      case Add: return kids[0]->eval(b, f) + kids[1]->eval(b, f);
      case Sub: return kids[0]->eval(b, f) - kids[1]->eval(b, f);
      case Mul: return kids[0]->eval(b, f) * kids[1]->eval(b, f);
      case Div: return kids[0]->eval(b, f) / kids[1]->eval(b, f);
      case Pow: return std::pow(kids[0]->eval(b, f), kids[1]->eval(b, f));
      case Call: {
        double a = kids[0]->eval(b, f);
        if (fn == "sin") return std::sin(a);
        if (fn == "cos") return std::cos(a);
        if (fn == "exp") return std::exp(a);
        if (fn == "sqrt") return std::sqrt(a);
        if (fn == "abs") return std::fabs(a);
        return std::pow(a, kids[1]->eval(b, f));
      }
    }
    return 0;
  }
};

namespace {

using NodeP = std::shared_ptr<const Expr::Node>;

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodeP parse_all() {
    NodeP n = expr();
    skip();
    if (i_ < s_.size()) fail("unexpected '" + std::string(1, s_[i_]) + "'");
    return n;
  }
  int max_base = 0, max_fiber = 0;

 private:
  const std::string& s_;
  std::size_t i_ = 0;

  [[noreturn]] void fail(const std::string& m) const { throw ExprError(m, static_cast<int>(i_) + 1); }
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
  static NodeP make(Expr::Node::Kind k, std::vector<NodeP> kids = {}, double v = 0, int var = 0,
                    std::string fn = {}) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = k;
    n->kids = std::move(kids);
    n->value = v;
    n->var = var;
    n->fn = std::move(fn);
    return n;
  }

  NodeP expr() {
    NodeP l = term();
    for (;;) {
      if (eat('+')) l = make(Expr::Node::Add, {l, term()});
      else if (eat('-')) l = make(Expr::Node::Sub, {l, term()});
      else return l;
    }
  }
  NodeP term() {
    NodeP l = unary();
    for (;;) {
      if (eat('*')) l = make(Expr::Node::Mul, {l, unary()});
      else if (eat('/')) l = make(Expr::Node::Div, {l, unary()});
      else return l;
    }
  }
  NodeP unary() {
    if (eat('-')) return make(Expr::Node::Neg, {unary()});
    if (eat('+')) return unary();
    NodeP b = primary();
    if (eat('^')) return make(Expr::Node::Pow, {b, unary()});
    return b;
  }
  NodeP primary() {
    skip();
    if (i_ >= s_.size()) fail("unexpected end of expression");
    if (eat('(')) {
      NodeP n = expr();
      if (!eat(')')) fail("expected ')'");
      return n;
    }
    char c = s_[i_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = std::stod(s_.substr(i_), &used);
      i_ += used;
      return make(Expr::Node::Num, {}, v);
    }
    if (s_.compare(i_, 2, "\xce\xbe") == 0) {  // UTF-8 xi
      i_ += 2;
      return var_node("xi" + digits());
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t st = i_;
      while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) ++i_;
      std::string id = s_.substr(st, i_ - st);
      if (eat('(')) {
        std::vector<NodeP> args{expr()};
        if (eat(',')) args.push_back(expr());
        if (!eat(')')) fail("expected ')' after arguments of " + id);
        bool unary_fn = id == "sin" || id == "cos" || id == "exp" || id == "sqrt" || id == "abs";
        if (unary_fn && args.size() == 1) return make(Expr::Node::Call, args, 0, 0, id);
        if (id == "pow" && args.size() == 2) return make(Expr::Node::Call, args, 0, 0, id);
        i_ = st;
        fail("unknown function or wrong arity: " + id);
      }
      if (id == "pi") return make(Expr::Node::Num, {}, std::numbers::pi);
      if (id == "e") return make(Expr::Node::Num, {}, std::numbers::e);
      std::size_t save = i_;
      i_ = st;
      NodeP v = var_node(id);
      i_ = save;
      return v;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }
  std::string digits() {
    std::size_t st = i_;
    while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
    return s_.substr(st, i_ - st);
  }
  NodeP var_node(const std::string& id) {
    auto index = [&](const std::string& rest) {
      if (rest.empty()) return 0;
      int k = std::stoi(rest);
      if (k < 1 || k > 2) fail("variable index out of range: " + id);
      return k - 1;
    };
    if (id.rfind("xi", 0) == 0 && id.find_first_not_of("0123456789", 2) == std::string::npos) {
      int k = index(id.substr(2));
      max_fiber = std::max(max_fiber, k + 1);
      return make(Expr::Node::Fiber, {}, 0, k);
    }
    if (id[0] == 'x' && id.find_first_not_of("0123456789", 1) == std::string::npos) {
      int k = index(id.substr(1));
      max_base = std::max(max_base, k + 1);
      return make(Expr::Node::Base, {}, 0, k);
    }
    if (id == "y") {
      max_base = std::max(max_base, 2);
      return make(Expr::Node::Base, {}, 0, 1);
    }
    fail("unknown identifier '" + id + "'");
  }
};

}  // namespace

Expr Expr::parse(const std::string& text) {
  Parser p(text);
  Expr e;
  e.root_ = p.parse_all();
  e.text_ = text;
  e.max_base_ = p.max_base;
  e.max_fiber_ = p.max_fiber;
  return e;
}

double Expr::eval(const std::vector<double>& base, const std::vector<double>& fiber) const {
  return root_->eval(base, fiber);
}

}  // namespace sq
