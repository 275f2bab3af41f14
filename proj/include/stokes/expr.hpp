#pragma once

// Scalar expressions: parsing, printing, evaluation and symbolic partial
// derivatives. Expressions are immutable trees with shared subtrees, so
// copies are cheap and evaluation is safe from any number of threads.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stokes {

enum class Op : std::uint8_t {
  Constant,
  Variable,
  Add,
  Sub,
  Mul,
  Div,
  Pow,  // base ^ constant exponent
  Neg,
  Sin,
  Cos,
  Exp,
  Log,
  Sqrt,
  Abs,
  Min,
  Max,
  IfLe,  // ifle(a, b, c, d) = c if a <= b else d
};

/// Thrown by parse(). offset() is the 0-based character offset of the
/// offending token (the text length when input ended too early).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t offset);
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Unbound variables and domain violations (log/sqrt of invalid arguments,
/// division by zero, invalid powers).
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public EvaluationError {
 public:
  using EvaluationError::EvaluationError;
};

class UnboundVariableError : public EvaluationError {
 public:
  using EvaluationError::EvaluationError;
};

struct Node;

class Expression {
 public:
  /// The constant zero.
  Expression();

  static Expression constant(double value);
  static Expression variable(std::string name);

  Op op() const noexcept;
  /// Constant value, or the exponent of a Pow node.
  double value() const noexcept;
  /// Variable name; empty for other nodes.
  const std::string& name() const noexcept;
  std::span<const Expression> args() const noexcept;

  bool is_constant() const noexcept { return op() == Op::Constant; }
  bool is_constant(double v) const noexcept { return is_constant() && value() == v; }
  std::optional<double> constant_value() const noexcept;

  const Node* node() const noexcept { return node_.get(); }

 private:
  explicit Expression(std::shared_ptr<const Node> node);
  friend Expression make_node(Op, double, std::string, std::vector<Expression>);

  std::shared_ptr<const Node> node_;
};

struct Node {
  Op op = Op::Constant;
  double value = 0.0;
  std::string name;
  std::vector<Expression> args;
};

// Smart constructors. They fold constants and apply 0/1 identities, nothing
// more.
Expression operator+(const Expression& a, const Expression& b);
Expression operator-(const Expression& a, const Expression& b);
Expression operator*(const Expression& a, const Expression& b);
Expression operator/(const Expression& a, const Expression& b);
Expression operator-(const Expression& a);
Expression pow(const Expression& base, double exponent);
Expression sin(const Expression& a);
Expression cos(const Expression& a);
Expression exp(const Expression& a);
Expression log(const Expression& a);
Expression sqrt(const Expression& a);
Expression abs(const Expression& a);
Expression min(const Expression& a, const Expression& b);
Expression max(const Expression& a, const Expression& b);
Expression ifle(const Expression& a, const Expression& b, const Expression& if_le, const Expression& otherwise);

/// Structural equality (same tree shape, same constants and names).
bool identical(const Expression& a, const Expression& b);

/// Grammar (whitespace ignored):
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('-' | '+') unary | power
///   power   := primary ('^' unary)?           exponent must fold to a constant
///   primary := number | 'pi' | name | name '(' expr (',' expr)* ')' | '(' expr ')'
/// Functions: sin cos exp log sqrt abs (one argument), min max (two),
/// ifle (four). Any other identifier is a variable.
Expression parse(std::string_view text);

/// Canonical printed form; parse(to_string(e)) evaluates identically to e.
std::string to_string(const Expression& e);

using Environment = std::map<std::string, double, std::less<>>;

double evaluate(const Expression& e, const Environment& env);

/// Partial derivative with respect to `var`.
///
/// Branch rules at ties: d min(a, b) follows a when a <= b, d max(a, b)
/// follows a when a >= b, and d|a| = a' when a >= 0 (else -a'). The result
/// may contain ifle nodes encoding these rules.
Expression differentiate(const Expression& e, std::string_view var);

std::set<std::string, std::less<>> free_variables(const Expression& e);

/// Names `prefix1 .. prefixN`, e.g. indexed_names('x', 3) = {x1, x2, x3}.
std::vector<std::string> indexed_names(char prefix, int count);

/// An expression flattened into a stack program with variables resolved to
/// positional slots. Built once, then evaluated in hot loops.
class CompiledExpression {
 public:
  CompiledExpression() = default;
  /// Throws UnboundVariableError if `e` references a name not in `slots`.
  CompiledExpression(const Expression& e, std::span<const std::string> slots);

  double operator()(std::span<const double> values) const;

  const Expression& source() const noexcept { return source_; }
  bool is_constant() const noexcept { return source_.is_constant(); }

 private:
  enum class Code : std::uint8_t {
    Const,
    Load,
    Unary,
    Binary,
    Pow,
    JumpIfGreater,  // pops b, a; jumps to target when !(a <= b)
    Jump,
  };
  struct Instr {
    Code code;
    Op op;
    std::int32_t operand;  // slot index or jump target
    double value;
    const Node* node;  // for diagnostics
  };

  void emit(const Expression& e, std::span<const std::string> slots, std::size_t& depth);

  Expression source_;
  std::vector<Instr> code_;
  std::size_t max_depth_ = 0;
};

}  // namespace stokes
