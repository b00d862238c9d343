#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace sq {

class ExprError : public std::runtime_error {
 public:
  ExprError(const std::string& msg, int column)
      : std::runtime_error(msg + " at column " + std::to_string(column)), column_(column) {}
  int column() const { return column_; }

 private:
  int column_;
};

// Closed-form real expression in base variables x, x1, x2 (x = x1) and fiber
// variables xi, xi1, xi2 (xi = xi1; the Greek letter is accepted too).
// Supports + - * / ^, pow, sin, cos, exp, sqrt, abs and the constants pi, e.
class Expr {
 public:
  static Expr parse(const std::string& text);
  double eval(const std::vector<double>& base, const std::vector<double>& fiber) const;
  const std::string& text() const { return text_; }
  int max_base_var() const { return max_base_; }
  int max_fiber_var() const { return max_fiber_; }

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
  int max_base_ = 0, max_fiber_ = 0;
};

}  // namespace sq
