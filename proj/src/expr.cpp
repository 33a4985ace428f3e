#include "vistep/expr.hpp"

#include <charconv>
#include <cmath>
#include <vector>

#include "vistep/error.hpp"

namespace vistep::expr {

namespace {

constexpr int kMaxDepth = 200;

enum class Tok {
  Number, Text, True, False, And, Or, Xor, Not, If, Else,
  Plus, Minus, Star, Slash, EqEq, NotEq, Lt, Le, Gt, Ge, LParen, RParen, End,
};

struct Token {
  Tok kind;
  std::size_t column;  // 0-based
  std::string text;
  double number = 0;
};

[[noreturn]] void syntax_error(std::size_t column, const std::string& message) {
  throw Error(ErrorCode::ExprSyntaxError, "expression syntax error at column " + std::to_string(column + 1) + ": " + message,
              {{"column", column + 1}});
}

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  auto is_ident = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || (c >= '0' && c <= '9'); };
  while (i < src.size()) {
    char c = src[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (is_digit(c) || (c == '.' && i + 1 < src.size() && is_digit(src[i + 1]))) {
      while (i < src.size() && is_digit(src[i])) ++i;
      if (i < src.size() && src[i] == '.') {
        ++i;
        while (i < src.size() && is_digit(src[i])) ++i;
      }
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
        if (j < src.size() && is_digit(src[j])) {
          i = j;
          while (i < src.size() && is_digit(src[i])) ++i;
        }
      }
      if (i < src.size() && is_ident(src[i])) syntax_error(i, "unexpected character in number");
      Token t{Tok::Number, start, std::string(src.substr(start, i - start))};
      auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      if (res.ec != std::errc() || !std::isfinite(t.number)) syntax_error(start, "number out of range");
      out.push_back(std::move(t));
      continue;
    }
    if (c == '\'' || c == '"') {
      ++i;
      std::string text;
      bool closed = false;
      while (i < src.size()) {
        char d = src[i];
        if (d == '\\' && i + 1 < src.size() && (src[i + 1] == c || src[i + 1] == '\\')) {
          text.push_back(src[i + 1]);
          i += 2;
          continue;
        }
        if (d == c) {
          closed = true;
          ++i;
          break;
        }
        text.push_back(d);
        ++i;
      }
      if (!closed) syntax_error(start, "unterminated text literal");
      out.push_back({Tok::Text, start, std::move(text)});
      continue;
    }
    if (is_ident(c)) {
      while (i < src.size() && is_ident(src[i])) ++i;
      auto word = src.substr(start, i - start);
      Tok kind;
      if (word == "True") kind = Tok::True;
      else if (word == "False") kind = Tok::False;
      else if (word == "and") kind = Tok::And;
      else if (word == "or") kind = Tok::Or;
      else if (word == "xor") kind = Tok::Xor;
      else if (word == "not") kind = Tok::Not;
      else if (word == "if") kind = Tok::If;
      else if (word == "else") kind = Tok::Else;
      else syntax_error(start, "unknown name '" + std::string(word) + "'");
      out.push_back({kind, start, std::string(word)});
      continue;
    }
    auto two = src.substr(i, 2);
    auto push = [&](Tok k, std::size_t len) {
      out.push_back({k, start, std::string(src.substr(start, len))});
      i += len;
    };
    if (two == "==") push(Tok::EqEq, 2);
    else if (two == "!=") push(Tok::NotEq, 2);
    else if (two == "<=") push(Tok::Le, 2);
    else if (two == ">=") push(Tok::Ge, 2);
    else if (c == '<') push(Tok::Lt, 1);
    else if (c == '>') push(Tok::Gt, 1);
    else if (c == '+') push(Tok::Plus, 1);
    else if (c == '-') push(Tok::Minus, 1);
    else if (c == '*') push(Tok::Star, 1);
    else if (c == '/') push(Tok::Slash, 1);
    else if (c == '(') push(Tok::LParen, 1);
    else if (c == ')') push(Tok::RParen, 1);
    else syntax_error(start, std::string("unexpected character '") + c + "'");
  }
  out.push_back({Tok::End, src.size(), ""});
  return out;
}

NodePtr make(auto node) { return std::make_shared<const Node>(Node{std::move(node)}); }

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  NodePtr parse_all() {
    auto n = expression();
    if (cur().kind != Tok::End) syntax_error(cur().column, "unexpected '" + cur().text + "'");
    return n;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int depth_ = 0;

  const Token& cur() const { return toks_[pos_]; }
  bool accept(Tok k) {
    if (cur().kind != k) return false;
    ++pos_;
    return true;
  }

  struct DepthGuard {
    Parser& p;
    explicit DepthGuard(Parser& parser) : p(parser) {
      if (++p.depth_ > kMaxDepth) syntax_error(p.cur().column, "expression nested too deeply");
    }
    ~DepthGuard() { --p.depth_; }
  };

  NodePtr expression() {
    DepthGuard guard(*this);
    auto value = or_expr();
    if (accept(Tok::If)) {
      auto cond = or_expr();
      if (!accept(Tok::Else)) syntax_error(cur().column, "expected 'else'");
      auto other = expression();
      return make(Conditional{value, cond, other});
    }
    return value;
  }

  NodePtr or_expr() {
    auto lhs = xor_expr();
    while (accept(Tok::Or)) {
      auto rhs = xor_expr();
      lhs = make(Binary{BinaryOp::Or, lhs, rhs});
    }
    return lhs;
  }

  NodePtr xor_expr() {
    auto lhs = and_expr();
    while (accept(Tok::Xor)) {
      auto rhs = and_expr();
      lhs = make(Binary{BinaryOp::Xor, lhs, rhs});
    }
    return lhs;
  }

  NodePtr and_expr() {
    auto lhs = not_expr();
    while (accept(Tok::And)) {
      auto rhs = not_expr();
      lhs = make(Binary{BinaryOp::And, lhs, rhs});
    }
    return lhs;
  }

  NodePtr not_expr() {
    DepthGuard guard(*this);
    if (accept(Tok::Not)) return make(Unary{UnaryOp::Not, not_expr()});
    return comparison();
  }

  static std::optional<BinaryOp> comparison_op(Tok k) {
    switch (k) {
      case Tok::EqEq: return BinaryOp::Eq;
      case Tok::NotEq: return BinaryOp::Ne;
      case Tok::Lt: return BinaryOp::Lt;
      case Tok::Le: return BinaryOp::Le;
      case Tok::Gt: return BinaryOp::Gt;
      case Tok::Ge: return BinaryOp::Ge;
      default: return std::nullopt;
    }
  }

  NodePtr comparison() {
    auto lhs = sum();
    if (auto op = comparison_op(cur().kind)) {
      ++pos_;
      auto rhs = sum();
      if (comparison_op(cur().kind)) syntax_error(cur().column, "chained comparisons are not supported");
      return make(Binary{*op, lhs, rhs});
    }
    return lhs;
  }

  NodePtr sum() {
    auto lhs = term();
    while (true) {
      BinaryOp op;
      if (accept(Tok::Plus)) op = BinaryOp::Add;
      else if (accept(Tok::Minus)) op = BinaryOp::Sub;
      else return lhs;
      auto rhs = term();
      lhs = make(Binary{op, lhs, rhs});
    }
  }

  NodePtr term() {
    auto lhs = unary();
    while (true) {
      BinaryOp op;
      if (accept(Tok::Star)) op = BinaryOp::Mul;
      else if (accept(Tok::Slash)) op = BinaryOp::Div;
      else return lhs;
      auto rhs = unary();
      lhs = make(Binary{op, lhs, rhs});
    }
  }

  NodePtr unary() {
    DepthGuard guard(*this);
    if (accept(Tok::Minus)) return make(Unary{UnaryOp::Negate, unary()});
    return atom();
  }

  NodePtr atom() {
    const Token& t = cur();
    switch (t.kind) {
      case Tok::Number: ++pos_; return make(Literal{Value::number(t.number)});
      case Tok::Text: ++pos_; return make(Literal{Value::text(t.text)});
      case Tok::True: ++pos_; return make(Literal{Value::boolean(true)});
      case Tok::False: ++pos_; return make(Literal{Value::boolean(false)});
      case Tok::LParen: {
        ++pos_;
        auto inner = expression();
        if (!accept(Tok::RParen)) syntax_error(cur().column, "expected ')'");
        return inner;
      }
      case Tok::End: syntax_error(t.column, "unexpected end of expression");
      default: syntax_error(t.column, "unexpected '" + t.text + "'");
    }
  }
};

[[noreturn]] void type_error(const std::string& what) { throw Error(ErrorCode::ExprTypeError, what); }

std::string kind_name(const Value& v) { return std::string(to_string(v.kind())); }

bool require_bool(const Value& v, std::string_view op) {
  if (!v.is(ValueKind::Boolean)) type_error("operator '" + std::string(op) + "' needs boolean operands, got " + kind_name(v));
  return v.as_boolean();
}

Value apply_binary(BinaryOp op, const Value& a, const Value& b) {
  const auto name = to_string(op);
  auto both = [&](ValueKind k) { return a.is(k) && b.is(k); };
  switch (op) {
    case BinaryOp::Add:
      if (both(ValueKind::Number)) return Value::number(a.as_number() + b.as_number());
      if (both(ValueKind::Text)) return Value::text(a.as_text() + b.as_text());
      break;
    case BinaryOp::Sub:
      if (both(ValueKind::Number)) return Value::number(a.as_number() - b.as_number());
      break;
    case BinaryOp::Mul:
      if (both(ValueKind::Number)) return Value::number(a.as_number() * b.as_number());
      break;
    case BinaryOp::Div:
      if (both(ValueKind::Number)) {
        if (b.as_number() == 0) throw Error(ErrorCode::DivisionByZero, "division by zero");
        return Value::number(a.as_number() / b.as_number());
      }
      break;
    case BinaryOp::Eq:
    case BinaryOp::Ne: {
      if (a.kind() != b.kind()) break;
      bool eq = a == b;
      return Value::boolean(op == BinaryOp::Eq ? eq : !eq);
    }
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge: {
      int cmp;
      if (both(ValueKind::Number)) {
        double x = a.as_number(), y = b.as_number();
        cmp = x < y ? -1 : (x > y ? 1 : 0);
      } else if (both(ValueKind::Text)) {
        cmp = a.as_text().compare(b.as_text());
        cmp = cmp < 0 ? -1 : (cmp > 0 ? 1 : 0);
      } else {
        break;
      }
      bool r = op == BinaryOp::Lt ? cmp < 0 : op == BinaryOp::Le ? cmp <= 0 : op == BinaryOp::Gt ? cmp > 0 : cmp >= 0;
      return Value::boolean(r);
    }
    case BinaryOp::Xor: return Value::boolean(require_bool(a, name) != require_bool(b, name));
    case BinaryOp::And:
    case BinaryOp::Or: break;
  }
  type_error("operator '" + std::string(name) + "' not defined for " + kind_name(a) + " and " + kind_name(b));
}

bool is_plain_number(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && s[i] == '-') ++i;
  std::size_t digits = 0;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++digits;
  if (digits == 0) return false;
  if (i < s.size() && s[i] == '.') {
    ++i;
    std::size_t frac = 0;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++frac;
    if (frac == 0) return false;
  }
  return i == s.size();
}

std::string trim_lower(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(b, e - b + 1));
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string_view to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::And: return "and";
    case BinaryOp::Or: return "or";
    case BinaryOp::Xor: return "xor";
  }
  return "?";
}

NodePtr parse(std::string_view source) { return Parser(lex(source)).parse_all(); }

Value evaluate(const Node& node) {
  return std::visit(
      [](const auto& n) -> Value {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Literal>) {
          return n.value;
        } else if constexpr (std::is_same_v<T, Unary>) {
          Value v = evaluate(*n.operand);
          if (n.op == UnaryOp::Negate) {
            if (!v.is(ValueKind::Number)) type_error("unary '-' needs a number, got " + kind_name(v));
            return Value::number(-v.as_number());
          }
          return Value::boolean(!require_bool(v, "not"));
        } else if constexpr (std::is_same_v<T, Binary>) {
          if (n.op == BinaryOp::And || n.op == BinaryOp::Or) {
            bool lhs = require_bool(evaluate(*n.lhs), to_string(n.op));
            if (n.op == BinaryOp::And && !lhs) return Value::boolean(false);
            if (n.op == BinaryOp::Or && lhs) return Value::boolean(true);
            return Value::boolean(require_bool(evaluate(*n.rhs), to_string(n.op)));
          }
          Value lhs = evaluate(*n.lhs);
          Value rhs = evaluate(*n.rhs);
          return apply_binary(n.op, lhs, rhs);
        } else {
          Value cond = evaluate(*n.condition);
          if (!cond.is(ValueKind::Boolean)) type_error("conditional test must be boolean, got " + kind_name(cond));
          return cond.as_boolean() ? evaluate(*n.then_branch) : evaluate(*n.else_branch);
        }
      },
      node.node);
}

Value eval_expr(std::string_view source) { return evaluate(*parse(source)); }

std::string literal_for(const Value& value) {
  switch (value.kind()) {
    case ValueKind::Boolean: return value.as_boolean() ? "True" : "False";
    case ValueKind::Number: {
      double v = value.as_number();
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::UnsupportedValueKind, "non-finite numbers cannot be spliced into expressions");
      }
      return format_number(v);
    }
    case ValueKind::Text: {
      // Answers from the VQA module arrive as text; yes/no and plain numerals
      // splice as their boolean / numeric literal so they combine with operators.
      const auto& raw = value.as_text();
      const auto norm = trim_lower(raw);
      if (norm == "yes" || norm == "true") return "True";
      if (norm == "no" || norm == "false") return "False";
      if (is_plain_number(norm)) return norm;
      std::string out = "'";
      for (std::size_t i = 0; i < raw.size(); ++i) {
        char c = raw[i];
        if (c == '\'') out += "\\'";
        else if (c == '\\' && (i + 1 == raw.size() || raw[i + 1] == '\'' || raw[i + 1] == '\\')) out += "\\\\";
        else out += c;
      }
      return out + "'";
    }
    default:
      throw Error(ErrorCode::UnsupportedValueKind,
                  "values of kind " + std::string(to_string(value.kind())) + " cannot be used in expressions",
                  {{"kind", to_string(value.kind())}});
  }
}

std::string substitute(std::string_view tmpl, const ProgramState& state) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    char c = tmpl[i];
    if (c == '{') {
      auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto name = tmpl.substr(i + 1, close - i - 1);
        if (is_variable_name(name)) {
          out += literal_for(state.lookup(std::string(name)));
          i = close + 1;
          continue;
        }
      }
    }
    out += c;
    ++i;
  }
  return out;
}

}  // namespace vistep::expr
