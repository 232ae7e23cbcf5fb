#pragma once

#include <map>
#include <cstdint>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gfqi {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when an expression references a variable that has no value.
struct UnboundVariable : Error {
  explicit UnboundVariable(const std::string& name)
      : Error("unassigned variable '" + name + "'"), variable(name) {}
  std::string variable;
};

/// Raised for sqrt of a negative argument.
struct DomainError : Error {
  using Error::Error;
};

struct ParseError : Error {
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset(offset) {}
  std::size_t offset;
};

enum class ExprKind { constant, variable, sum, product, power, sqrt, sin, cos, exp, bump };

struct ExprNode;

/// Immutable expression tree over named real variables.
///
/// Nodes are shared; copying an Expr is cheap. Every operation returns a new
/// tree and never mutates its input, so Exprs can be read from many threads.
class Expr {
 public:
  Expr();  // the constant 0
  static Expr constant(double value);
  static Expr variable(std::string name);

  ExprKind kind() const;
  double value() const;               // constant only
  const std::string& name() const;    // variable only
  int exponent() const;               // power only
  const std::vector<Expr>& children() const;

  bool is_constant() const { return kind() == ExprKind::constant; }
  bool is_constant(double v) const { return is_constant() && value() == v; }

  const ExprNode* id() const { return node_.get(); }

 private:
  explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const ExprNode> node_;

  friend Expr make_node(ExprKind, std::vector<Expr>, int);
};

struct ExprNode {
  ExprKind kind = ExprKind::constant;
  double value = 0.0;
  std::string name;
  int exponent = 0;
  std::vector<Expr> children;
};

Expr sum(std::vector<Expr> terms);
Expr product(std::vector<Expr> factors);
Expr pow(const Expr& base, int exponent);
Expr sqrt(const Expr& arg);
Expr sin(const Expr& arg);
Expr cos(const Expr& arg);
Expr exp(const Expr& arg);
/// bump(x) = exp(1 - 1/(1 - x^2)) on |x| < 1, and exactly 0 elsewhere.
Expr bump(const Expr& arg);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator+(const Expr& a, double b);
Expr operator+(double a, const Expr& b);
Expr operator-(const Expr& a, double b);
Expr operator-(double a, const Expr& b);
Expr operator*(const Expr& a, double b);
Expr operator*(double a, const Expr& b);

double bump_value(double x);

using Assignment = std::map<std::string, double, std::less<>>;
using Bindings = std::map<std::string, Expr, std::less<>>;

/// Products containing an exact zero factor evaluate to 0 even when another
/// factor is infinite; this carries the bump's zero-outside-support
/// convention through derivatives such as pow(1 - x^2, -2) * bump(x).
double eval(const Expr& e, const Assignment& point);
Expr diff(const Expr& e, std::string_view var);
Expr substitute(const Expr& e, const Bindings& bindings);
Expr simplify(const Expr& e);

std::set<std::string> free_variables(const Expr& e);
std::size_t node_count(const Expr& e);

/// Fully parenthesized prefix form, numbers printed with 17 significant digits.
std::string to_prefix(const Expr& e);
Expr parse_prefix(std::string_view text);

std::string format_double(double v);

/// Flattened evaluation tape with variables bound to fixed slots. Shared
/// subtrees of several outputs are evaluated once.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  CompiledExpr(const Expr& e, const std::vector<std::string>& slots);
  CompiledExpr(const std::vector<Expr>& outputs, const std::vector<std::string>& slots);

  double operator()(std::span<const double> values) const;
  void eval_all(std::span<const double> values, std::span<double> out) const;
  std::size_t output_count() const { return outputs_.size(); }

 private:
  struct Op {
    ExprKind kind;
    double value;
    int slot;
    int exponent;
    int first;  // index into args_
    int count;
    std::uint64_t deps;  // slots the value depends on
  };
  std::uint64_t id_ = 0;
  std::vector<Op> ops_;
  std::vector<int> args_;
  std::vector<int> outputs_;
};

}  // namespace gfqi
