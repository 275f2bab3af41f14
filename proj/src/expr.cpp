#include "stokes/expr.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

namespace stokes {

ParseError::ParseError(const std::string& message, std::size_t offset)
    : std::runtime_error("syntax error at offset " + std::to_string(offset) + ": " + message), offset_(offset) {}

Expression make_node(Op op, double value, std::string name, std::vector<Expression> args) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->value = value;
  node->name = std::move(name);
  node->args = std::move(args);
  return Expression(std::move(node));
}

namespace {

const Expression& zero_expression() {
  static const Expression zero = make_node(Op::Constant, 0.0, {}, {});
  return zero;
}

bool is_unary_function(Op op) {
  switch (op) {
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Log:
    case Op::Sqrt:
    case Op::Abs:
      return true;
    default:
      return false;
  }
}

const char* function_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Abs: return "abs";
    case Op::Min: return "min";
    case Op::Max: return "max";
    case Op::IfLe: return "ifle";
    default: return "?";
  }
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

[[noreturn]] void domain_error(const Node* node, const std::string& what, double arg) {
  std::string where = node ? to_string(make_node(node->op, node->value, node->name, node->args)) : std::string("?");
  throw DomainError("domain error: " + what + " (argument " + format_number(arg) + ") in '" + where + "'");
}

// Both evaluators go through these two functions so that their results agree
// bit for bit.
double apply_unary(Op op, double a, const Node* node) {
  switch (op) {
    case Op::Neg: return -a;
    case Op::Sin: return std::sin(a);
    case Op::Cos: return std::cos(a);
    case Op::Exp: return std::exp(a);
    case Op::Log:
      if (!(a > 0.0)) domain_error(node, "log of non-positive value", a);
      return std::log(a);
    case Op::Sqrt:
      if (a < 0.0 || std::isnan(a)) domain_error(node, "sqrt of negative value", a);
      return std::sqrt(a);
    case Op::Abs: return std::fabs(a);
    default: throw std::logic_error("not a unary op");
  }
}

double apply_binary(Op op, double a, double b, const Node* node) {
  switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div:
      if (b == 0.0) domain_error(node, "division by zero", a);
      return a / b;
    case Op::Min: return a <= b ? a : b;
    case Op::Max: return a >= b ? a : b;
    default: throw std::logic_error("not a binary op");
  }
}

double apply_pow(double base, double exponent, const Node* node) {
  if (base == 0.0 && exponent < 0.0) domain_error(node, "zero raised to a negative power", base);
  if (base < 0.0 && std::trunc(exponent) != exponent) domain_error(node, "negative base with non-integer exponent", base);
  return std::pow(base, exponent);
}

std::optional<double> fold_unary(Op op, double a) {
  try {
    double v = apply_unary(op, a, nullptr);
    if (std::isfinite(v)) return v;
  } catch (const DomainError&) {
  }
  return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------
// Expression

Expression::Expression() : node_(zero_expression().node_) {}

Expression::Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Expression Expression::constant(double value) {
  if (value == 0.0) value = 0.0;  // no negative zero
  return make_node(Op::Constant, value, {}, {});
}

Expression Expression::variable(std::string name) { return make_node(Op::Variable, 0.0, std::move(name), {}); }

Op Expression::op() const noexcept { return node_->op; }
double Expression::value() const noexcept { return node_->value; }
const std::string& Expression::name() const noexcept { return node_->name; }
std::span<const Expression> Expression::args() const noexcept { return node_->args; }

std::optional<double> Expression::constant_value() const noexcept {
  if (is_constant()) return value();
  return std::nullopt;
}

bool identical(const Expression& a, const Expression& b) {
  if (a.node() == b.node()) return true;
  if (a.op() != b.op()) return false;
  switch (a.op()) {
    case Op::Constant:
      return a.value() == b.value() && std::signbit(a.value()) == std::signbit(b.value());
    case Op::Variable:
      return a.name() == b.name();
    case Op::Pow:
      if (a.value() != b.value()) return false;
      break;
    default:
      break;
  }
  if (a.args().size() != b.args().size()) return false;
  for (std::size_t i = 0; i < a.args().size(); ++i)
    if (!identical(a.args()[i], b.args()[i])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Smart constructors

Expression operator+(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.value() + b.value());
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  return make_node(Op::Add, 0.0, {}, {a, b});
}

Expression operator-(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.value() - b.value());
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return -b;
  return make_node(Op::Sub, 0.0, {}, {a, b});
}

Expression operator*(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.value() * b.value());
  if (a.is_constant(0.0) || b.is_constant(0.0)) return Expression::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  return make_node(Op::Mul, 0.0, {}, {a, b});
}

Expression operator/(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant() && b.value() != 0.0) return Expression::constant(a.value() / b.value());
  if (a.is_constant(0.0) && !b.is_constant(0.0)) return Expression::constant(0.0);
  if (b.is_constant(1.0)) return a;
  return make_node(Op::Div, 0.0, {}, {a, b});
}

Expression operator-(const Expression& a) {
  if (a.is_constant()) return Expression::constant(-a.value());
  if (a.op() == Op::Neg) return a.args()[0];
  return make_node(Op::Neg, 0.0, {}, {a});
}

Expression pow(const Expression& base, double exponent) {
  if (exponent == 0.0) return Expression::constant(1.0);
  if (exponent == 1.0) return base;
  if (base.is_constant()) {
    try {
      double v = apply_pow(base.value(), exponent, nullptr);
      if (std::isfinite(v)) return Expression::constant(v);
    } catch (const DomainError&) {
    }
  }
  return make_node(Op::Pow, exponent, {}, {base});
}

namespace {
Expression unary(Op op, const Expression& a) {
  if (a.is_constant()) {
    if (auto v = fold_unary(op, a.value())) return Expression::constant(*v);
  }
  return make_node(op, 0.0, {}, {a});
}
}  // namespace

Expression sin(const Expression& a) { return unary(Op::Sin, a); }
Expression cos(const Expression& a) { return unary(Op::Cos, a); }
Expression exp(const Expression& a) { return unary(Op::Exp, a); }
Expression log(const Expression& a) { return unary(Op::Log, a); }
Expression sqrt(const Expression& a) { return unary(Op::Sqrt, a); }
Expression abs(const Expression& a) { return unary(Op::Abs, a); }

Expression min(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.value() <= b.value() ? a.value() : b.value());
  if (identical(a, b)) return a;
  return make_node(Op::Min, 0.0, {}, {a, b});
}

Expression max(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.value() >= b.value() ? a.value() : b.value());
  if (identical(a, b)) return a;
  return make_node(Op::Max, 0.0, {}, {a, b});
}

Expression ifle(const Expression& a, const Expression& b, const Expression& if_le, const Expression& otherwise) {
  if (a.is_constant() && b.is_constant()) return a.value() <= b.value() ? if_le : otherwise;
  if (identical(if_le, otherwise)) return if_le;
  return make_node(Op::IfLe, 0.0, {}, {a, b, if_le, otherwise});
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expression parse_all() {
    Expression e = parse_expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const { throw ParseError(message, pos_); }
  [[noreturn]] void fail_at(const std::string& message, std::size_t at) const { throw ParseError(message, at); }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= text_.size()) fail(std::string("expected '") + c + "' but input ended");
      fail(std::string("expected '") + c + "'");
    }
  }

  Expression parse_expr() {
    Expression lhs = parse_term();
    for (;;) {
      if (accept('+'))
        lhs = lhs + parse_term();
      else if (accept('-'))
        lhs = lhs - parse_term();
      else
        return lhs;
    }
  }

  Expression parse_term() {
    Expression lhs = parse_unary();
    for (;;) {
      if (accept('*'))
        lhs = lhs * parse_unary();
      else if (accept('/'))
        lhs = lhs / parse_unary();
      else
        return lhs;
    }
  }

  Expression parse_unary() {
    if (accept('-')) return -parse_unary();
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  Expression parse_power() {
    Expression base = parse_primary();
    if (accept('^')) {
      skip_space();
      std::size_t at = pos_;
      Expression exponent = parse_unary();
      if (!exponent.is_constant()) fail_at("exponent must be a constant", at);
      return pow(base, exponent.value());
    }
    return base;
  }

  Expression parse_primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expression inner = parse_expr();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  Expression parse_number() {
    std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t mantissa = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) fail_at("malformed number", start);
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;
    }
    std::string lexeme(text_.substr(start, pos_ - start));
    if (lexeme.front() == '.') lexeme.insert(lexeme.begin(), '0');
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), v);
    if (ec != std::errc() || ptr != lexeme.data() + lexeme.size()) fail_at("malformed number", start);
    return Expression::constant(v);
  }

  Expression parse_identifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    std::string name(text_.substr(start, pos_ - start));
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      std::vector<Expression> args;
      args.push_back(parse_expr());
      while (accept(',')) args.push_back(parse_expr());
      expect(')');
      return call(name, args, start);
    }
    if (name == "pi") return Expression::constant(std::numbers::pi);
    return Expression::variable(std::move(name));
  }

  Expression call(const std::string& name, const std::vector<Expression>& args, std::size_t at) {
    struct Entry {
      const char* name;
      std::size_t arity;
    };
    static constexpr std::array<Entry, 9> table{{{"sin", 1},
                                                 {"cos", 1},
                                                 {"exp", 1},
                                                 {"log", 1},
                                                 {"sqrt", 1},
                                                 {"abs", 1},
                                                 {"min", 2},
                                                 {"max", 2},
                                                 {"ifle", 4}}};
    for (const auto& entry : table) {
      if (name != entry.name) continue;
      if (args.size() != entry.arity)
        fail_at("function '" + name + "' takes " + std::to_string(entry.arity) + " argument(s), got " +
                    std::to_string(args.size()),
                at);
      if (name == "sin") return sin(args[0]);
      if (name == "cos") return cos(args[0]);
      if (name == "exp") return exp(args[0]);
      if (name == "log") return log(args[0]);
      if (name == "sqrt") return sqrt(args[0]);
      if (name == "abs") return abs(args[0]);
      if (name == "min") return min(args[0], args[1]);
      if (name == "max") return max(args[0], args[1]);
      return ifle(args[0], args[1], args[2], args[3]);
    }
    fail_at("unknown function '" + name + "'", at);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression parse(std::string_view text) { return Parser(text).parse_all(); }

// ---------------------------------------------------------------------------
// Printer

namespace {

// Precedence levels: 1 additive, 2 multiplicative, 3 unary minus, 4 power,
// 5 atoms.
int precedence(const Expression& e) {
  switch (e.op()) {
    case Op::Add:
    case Op::Sub:
      return 1;
    case Op::Mul:
    case Op::Div:
      return 2;
    case Op::Neg:
      return 3;
    case Op::Pow:
      return 4;
    case Op::Constant:
      return e.value() < 0.0 || std::signbit(e.value()) ? 3 : 5;
    default:
      return 5;
  }
}

void print(std::ostringstream& os, const Expression& e);

void print_wrapped(std::ostringstream& os, const Expression& e, bool wrap) {
  if (wrap) os << '(';
  print(os, e);
  if (wrap) os << ')';
}

void print(std::ostringstream& os, const Expression& e) {
  auto args = e.args();
  switch (e.op()) {
    case Op::Constant:
      os << format_number(e.value());
      return;
    case Op::Variable:
      os << e.name();
      return;
    case Op::Add:
      print_wrapped(os, args[0], precedence(args[0]) < 1);
      os << " + ";
      print_wrapped(os, args[1], precedence(args[1]) <= 1);
      return;
    case Op::Sub:
      print_wrapped(os, args[0], precedence(args[0]) < 1);
      os << " - ";
      print_wrapped(os, args[1], precedence(args[1]) <= 1);
      return;
    case Op::Mul:
      print_wrapped(os, args[0], precedence(args[0]) < 2);
      os << '*';
      print_wrapped(os, args[1], precedence(args[1]) <= 2);
      return;
    case Op::Div:
      print_wrapped(os, args[0], precedence(args[0]) < 2);
      os << '/';
      print_wrapped(os, args[1], precedence(args[1]) <= 2);
      return;
    case Op::Neg:
      os << '-';
      print_wrapped(os, args[0], precedence(args[0]) < 3);
      return;
    case Op::Pow:
      print_wrapped(os, args[0], precedence(args[0]) <= 4);
      os << '^';
      if (e.value() < 0.0)
        os << '(' << format_number(e.value()) << ')';
      else
        os << format_number(e.value());
      return;
    default: {
      os << function_name(e.op()) << '(';
      for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) os << ", ";
        print(os, args[i]);
      }
      os << ')';
      return;
    }
  }
}

}  // namespace

std::string to_string(const Expression& e) {
  std::ostringstream os;
  print(os, e);
  return os.str();
}

// ---------------------------------------------------------------------------
// Evaluation

double evaluate(const Expression& e, const Environment& env) {
  auto args = e.args();
  switch (e.op()) {
    case Op::Constant:
      return e.value();
    case Op::Variable: {
      auto it = env.find(e.name());
      if (it == env.end()) throw UnboundVariableError("unbound variable '" + e.name() + "'");
      return it->second;
    }
    case Op::Pow:
      return apply_pow(evaluate(args[0], env), e.value(), e.node());
    case Op::IfLe:
      return evaluate(args[0], env) <= evaluate(args[1], env) ? evaluate(args[2], env) : evaluate(args[3], env);
    case Op::Neg:
      return apply_unary(Op::Neg, evaluate(args[0], env), e.node());
    default:
      if (is_unary_function(e.op())) return apply_unary(e.op(), evaluate(args[0], env), e.node());
      {
        double a = evaluate(args[0], env);
        double b = evaluate(args[1], env);
        return apply_binary(e.op(), a, b, e.node());
      }
  }
}

// ---------------------------------------------------------------------------
// Differentiation

Expression differentiate(const Expression& e, std::string_view var) {
  auto args = e.args();
  auto d = [&](std::size_t i) { return differentiate(args[i], var); };
  switch (e.op()) {
    case Op::Constant:
      return Expression::constant(0.0);
    case Op::Variable:
      return Expression::constant(e.name() == var ? 1.0 : 0.0);
    case Op::Add:
      return d(0) + d(1);
    case Op::Sub:
      return d(0) - d(1);
    case Op::Neg:
      return -d(0);
    case Op::Mul:
      return d(0) * args[1] + args[0] * d(1);
    case Op::Div: {
      Expression da = d(0);
      Expression db = d(1);
      if (db.is_constant(0.0)) return da / args[1];
      return (da * args[1] - args[0] * db) / pow(args[1], 2.0);
    }
    case Op::Pow:
      return Expression::constant(e.value()) * pow(args[0], e.value() - 1.0) * d(0);
    case Op::Sin:
      return cos(args[0]) * d(0);
    case Op::Cos:
      return -(sin(args[0]) * d(0));
    case Op::Exp:
      return e * d(0);
    case Op::Log:
      return d(0) / args[0];
    case Op::Sqrt: {
      Expression da = d(0);
      if (da.is_constant(0.0)) return da;
      return da / (Expression::constant(2.0) * e);
    }
    case Op::Abs: {
      Expression da = d(0);
      return ifle(Expression::constant(0.0), args[0], da, -da);
    }
    case Op::Min:
      return ifle(args[0], args[1], d(0), d(1));
    case Op::Max:
      return ifle(args[1], args[0], d(0), d(1));
    case Op::IfLe:
      return ifle(args[0], args[1], d(2), d(3));
  }
  throw std::logic_error("unhandled expression node");
}

namespace {
void collect_variables(const Expression& e, std::set<std::string, std::less<>>& out) {
  if (e.op() == Op::Variable) out.insert(e.name());
  for (const auto& a : e.args()) collect_variables(a, out);
}
}  // namespace

std::set<std::string, std::less<>> free_variables(const Expression& e) {
  std::set<std::string, std::less<>> out;
  collect_variables(e, out);
  return out;
}

std::vector<std::string> indexed_names(char prefix, int count) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(count));
  for (int i = 1; i <= count; ++i) names.push_back(std::string(1, prefix) + std::to_string(i));
  return names;
}

// ---------------------------------------------------------------------------
// CompiledExpression

CompiledExpression::CompiledExpression(const Expression& e, std::span<const std::string> slots) : source_(e) {
  std::size_t depth = 0;
  emit(e, slots, depth);
}

void CompiledExpression::emit(const Expression& e, std::span<const std::string> slots, std::size_t& depth) {
  auto push = [&](Instr instr) { code_.push_back(instr); };
  auto grow = [&] {
    ++depth;
    max_depth_ = std::max(max_depth_, depth);
  };
  auto args = e.args();
  switch (e.op()) {
    case Op::Constant:
      push({Code::Const, Op::Constant, 0, e.value(), e.node()});
      grow();
      return;
    case Op::Variable: {
      for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i] == e.name()) {
          push({Code::Load, Op::Variable, static_cast<std::int32_t>(i), 0.0, e.node()});
          grow();
          return;
        }
      }
      throw UnboundVariableError("unbound variable '" + e.name() + "'");
    }
    case Op::Pow:
      emit(args[0], slots, depth);
      push({Code::Pow, Op::Pow, 0, e.value(), e.node()});
      return;
    case Op::IfLe: {
      emit(args[0], slots, depth);
      emit(args[1], slots, depth);
      std::size_t branch = code_.size();
      push({Code::JumpIfGreater, Op::IfLe, 0, 0.0, e.node()});
      depth -= 2;
      emit(args[2], slots, depth);
      std::size_t skip = code_.size();
      push({Code::Jump, Op::IfLe, 0, 0.0, e.node()});
      --depth;
      code_[branch].operand = static_cast<std::int32_t>(code_.size());
      emit(args[3], slots, depth);
      code_[skip].operand = static_cast<std::int32_t>(code_.size());
      return;
    }
    default:
      if (e.op() == Op::Neg || is_unary_function(e.op())) {
        emit(args[0], slots, depth);
        push({Code::Unary, e.op(), 0, 0.0, e.node()});
        return;
      }
      emit(args[0], slots, depth);
      emit(args[1], slots, depth);
      push({Code::Binary, e.op(), 0, 0.0, e.node()});
      --depth;
      return;
  }
}

double CompiledExpression::operator()(std::span<const double> values) const {
  if (code_.empty()) return 0.0;
  constexpr std::size_t kInline = 32;
  std::array<double, kInline> inline_stack;
  std::vector<double> heap_stack;
  double* stack = inline_stack.data();
  if (max_depth_ > kInline) {
    heap_stack.resize(max_depth_);
    stack = heap_stack.data();
  }
  std::size_t top = 0;
  const std::size_t n = code_.size();
  for (std::size_t pc = 0; pc < n;) {
    const Instr& in = code_[pc];
    switch (in.code) {
      case Code::Const:
        stack[top++] = in.value;
        ++pc;
        break;
      case Code::Load:
        stack[top++] = values[static_cast<std::size_t>(in.operand)];
        ++pc;
        break;
      case Code::Unary:
        stack[top - 1] = apply_unary(in.op, stack[top - 1], in.node);
        ++pc;
        break;
      case Code::Binary:
        stack[top - 2] = apply_binary(in.op, stack[top - 2], stack[top - 1], in.node);
        --top;
        ++pc;
        break;
      case Code::Pow:
        stack[top - 1] = apply_pow(stack[top - 1], in.value, in.node);
        ++pc;
        break;
      case Code::JumpIfGreater: {
        double b = stack[--top];
        double a = stack[--top];
        pc = a <= b ? pc + 1 : static_cast<std::size_t>(in.operand);
        break;
      }
      case Code::Jump:
        pc = static_cast<std::size_t>(in.operand);
        break;
    }
  }
  return stack[0];
}

}  // namespace stokes
