#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <variant>

#include "vistep/state.hpp"
#include "vistep/value.hpp"

namespace vistep::expr {

// Restricted infix expressions for the EVAL module. Grammar, lowest binding first:
//
//   expr    := or_expr ['if' or_expr 'else' expr]
//   or_expr := xor_expr ('or' xor_expr)*
//   xor_expr:= and_expr ('xor' and_expr)*
//   and_expr:= not_expr ('and' not_expr)*
//   not_expr:= 'not' not_expr | cmp
//   cmp     := sum [('=='|'!='|'<'|'<='|'>'|'>=') sum]     (no chaining)
//   sum     := term (('+'|'-') term)*
//   term    := unary (('*'|'/') unary)*
//   unary   := '-' unary | atom
//   atom    := NUMBER | 'text' | "text" | True | False | '(' expr ')'

enum class UnaryOp { Not, Negate };
enum class BinaryOp { Add, Sub, Mul, Div, Eq, Ne, Lt, Le, Gt, Ge, And, Or, Xor };

std::string_view to_string(BinaryOp op);

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Literal {
  Value value;  // Number, Text or Boolean
};
struct Unary {
  UnaryOp op;
  NodePtr operand;
};
struct Binary {
  BinaryOp op;
  NodePtr lhs;
  NodePtr rhs;
};
struct Conditional {
  NodePtr then_branch;
  NodePtr condition;
  NodePtr else_branch;
};

struct Node {
  std::variant<Literal, Unary, Binary, Conditional> node;
};

/// Throws Error{ExprSyntaxError} with the failing column in detail.
NodePtr parse(std::string_view source);

/// Throws ExprTypeError or DivisionByZero. `and`/`or` short-circuit and only
/// the chosen branch of a conditional is evaluated.
Value evaluate(const Node& node);

/// parse + evaluate.
Value eval_expr(std::string_view source);

/// Replaces `{VAR}` placeholders with literal renderings of bound values.
/// Throws UnboundVariable or UnsupportedValueKind.
std::string substitute(std::string_view tmpl, const ProgramState& state);

/// Literal text used by substitute() for a single value.
std::string literal_for(const Value& value);

}  // namespace vistep::expr
