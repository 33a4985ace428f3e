#include "vistep/dsl.hpp"

#include <charconv>
#include <cmath>
#include <optional>

#include "vistep/state.hpp"
#include "vistep/value.hpp"

namespace vistep::dsl {

namespace {

bool is_alpha(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_word(char c) { return is_alpha(c) || is_digit(c) || c == '_'; }

struct ParseFailure {
  Diagnostic diag;
};

class StepParser {
 public:
  explicit StepParser(std::string_view text) : text_(text) {}

  ProgramStep parse() {
    ProgramStep step;
    skip_ws();
    step.output = expect_variable("output variable name");
    expect_char('=');
    step.module = expect_word("module name", /*allow_underscore_start=*/false);
    expect_char('(');
    skip_ws();
    if (peek() == ')') {
      ++pos_;
    } else {
      while (true) {
        skip_ws();
        Arg arg;
        arg.name = expect_word("argument name", /*allow_underscore_start=*/true);
        expect_char('=');
        arg.value = parse_value();
        step.args.push_back(std::move(arg));
        skip_ws();
        char c = peek();
        if (c == ',') {
          ++pos_;
          continue;
        }
        if (c == ')') {
          ++pos_;
          break;
        }
        fail(pos_, at_end() ? "unexpected end of line" : "unexpected character", {"')'", "','"});
      }
    }
    skip_ws();
    if (!at_end()) fail(pos_, "unexpected text after ')'", {"end of line"});
    return step;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  void skip_ws() {
    while (!at_end() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r')) ++pos_;
  }

  [[noreturn]] void fail(std::size_t at, std::string message, std::vector<std::string> expected) {
    throw ParseFailure{Diagnostic{0, static_cast<int>(at) + 1, std::move(message), std::move(expected)}};
  }

  std::string_view scan_word() {
    std::size_t start = pos_;
    while (!at_end() && is_word(text_[pos_])) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  std::string expect_word(const char* what, bool allow_underscore_start) {
    skip_ws();
    char c = peek();
    if (!(is_alpha(c) || (allow_underscore_start && c == '_'))) {
      fail(pos_, at_end() ? "unexpected end of line" : "unexpected character", {what});
    }
    return std::string(scan_word());
  }

  std::string expect_variable(const char* what) {
    skip_ws();
    std::size_t start = pos_;
    if (!is_alpha(peek())) fail(pos_, at_end() ? "unexpected end of line" : "unexpected character", {what});
    auto word = scan_word();
    if (!is_variable_name(word)) {
      fail(start, "'" + std::string(word) + "' is not a valid variable name (expected [A-Z][A-Z0-9_]*)", {what});
    }
    return std::string(word);
  }

  void expect_char(char c) {
    skip_ws();
    if (peek() != c) {
      fail(pos_, at_end() ? "unexpected end of line" : "unexpected character", {std::string("'") + c + "'"});
    }
    ++pos_;
  }

  ArgValue parse_value() {
    skip_ws();
    static const std::vector<std::string> kValueTokens = {"quoted text", "number", "True", "False", "None",
                                                          "variable"};
    char c = peek();
    if (c == '\'' || c == '"') return parse_quoted(c);
    if (is_digit(c) || c == '-' || c == '.') return parse_number();
    if (is_alpha(c) || c == '_') {
      std::size_t start = pos_;
      auto word = scan_word();
      if (word == "True") return BooleanLiteral{true};
      if (word == "False") return BooleanLiteral{false};
      if (word == "None") return NoneLiteral{};
      if (is_variable_name(word)) return VarRef{std::string(word)};
      fail(start, "'" + std::string(word) + "' is not a value (variables match [A-Z][A-Z0-9_]*)", kValueTokens);
    }
    fail(pos_, at_end() ? "unexpected end of line" : "unexpected character", kValueTokens);
  }

  ArgValue parse_quoted(char quote) {
    std::size_t start = pos_;
    ++pos_;
    std::string out;
    while (true) {
      if (at_end()) fail(pos_, "unterminated text literal starting at column " + std::to_string(start + 1),
                         {std::string("'") + quote + "'"});
      char c = text_[pos_];
      if (c == '\\' && pos_ + 1 < text_.size() && (text_[pos_ + 1] == quote || text_[pos_ + 1] == '\\')) {
        out.push_back(text_[pos_ + 1]);
        pos_ += 2;
        continue;
      }
      if (c == quote) {
        ++pos_;
        return TextLiteral{std::move(out), quote};
      }
      out.push_back(c);
      ++pos_;
    }
  }

  ArgValue parse_number() {
    std::size_t start = pos_;
    if (peek() == '-') ++pos_;
    std::size_t digits = 0;
    while (is_digit(peek())) ++pos_, ++digits;
    if (peek() == '.') {
      ++pos_;
      while (is_digit(peek())) ++pos_, ++digits;
    }
    if (digits == 0) fail(start, "malformed number", {"number"});
    if (peek() == 'e' || peek() == 'E') {
      std::size_t mark = pos_;
      ++pos_;
      if (peek() == '+' || peek() == '-') ++pos_;
      std::size_t exp_digits = 0;
      while (is_digit(peek())) ++pos_, ++exp_digits;
      if (exp_digits == 0) fail(mark, "malformed exponent", {"digit"});
    }
    if (is_word(peek())) fail(pos_, "unexpected character in number", {"')'", "','"});
    auto lexeme = text_.substr(start, pos_ - start);
    // from_chars rejects a leading '+' but accepts "-"; strip nothing else.
    double value = 0;
    auto res = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), value);
    if (res.ec != std::errc() || res.ptr != lexeme.data() + lexeme.size() || !std::isfinite(value)) {
      fail(start, "number out of range", {"number"});
    }
    return NumberLiteral{value};
  }
};

std::string render_quoted(const TextLiteral& lit) {
  const char q = lit.quote == '"' ? '"' : '\'';
  std::string out(1, q);
  const auto& s = lit.value;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == q) {
      out += '\\';
      out += c;
    } else if (c == '\\' && (i + 1 == s.size() || s[i + 1] == q || s[i + 1] == '\\')) {
      out += "\\\\";
    } else {
      out += c;
    }
  }
  out += q;
  return out;
}

std::string render_number(double v) {
  if (v == 0 && std::signbit(v)) return "-0";
  return format_number(v);
}

}  // namespace

std::string Diagnostic::to_string() const {
  std::string out;
  if (line > 0) out += "line " + std::to_string(line) + ", ";
  out += "column " + std::to_string(column) + ": " + message;
  if (!expected.empty()) {
    out += " (expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) out += i + 1 == expected.size() ? " or " : ", ";
      out += expected[i];
    }
    out += ")";
  }
  return out;
}

namespace {

std::string join_diagnostics(const std::vector<Diagnostic>& diags) {
  std::string out = "syntax error";
  for (const auto& d : diags) out += "\n  " + d.to_string();
  return out;
}

nlohmann::json diagnostics_json(const std::vector<Diagnostic>& diags) {
  auto arr = nlohmann::json::array();
  for (const auto& d : diags) {
    arr.push_back({{"line", d.line}, {"column", d.column}, {"message", d.message}, {"expected", d.expected}});
  }
  return {{"diagnostics", arr}};
}

}  // namespace

SyntaxError::SyntaxError(std::vector<Diagnostic> diagnostics)
    : Error(ErrorCode::SyntaxError, join_diagnostics(diagnostics), diagnostics_json(diagnostics)),
      diagnostics_(std::move(diagnostics)) {}

ProgramStep parse_step(std::string_view line) {
  try {
    return StepParser(line).parse();
  } catch (ParseFailure& f) {
    throw SyntaxError({std::move(f.diag)});
  }
}

Program parse_program(std::string_view source) {
  Program program;
  program.source = std::string(source);
  std::vector<Diagnostic> diags;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= source.size()) {
    std::size_t nl = source.find('\n', pos);
    std::string_view line = source.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? source.size() + 1 : nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') continue;
    try {
      program.steps.push_back(StepParser(line).parse());
      program.lines.push_back(line_no);
    } catch (ParseFailure& f) {
      f.diag.line = line_no;
      diags.push_back(std::move(f.diag));
    }
  }
  if (!diags.empty()) throw SyntaxError(std::move(diags));
  if (program.steps.empty()) throw Error(ErrorCode::EmptyProgram, "program contains no steps");
  return program;
}

std::string render_arg_value(const ArgValue& value) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TextLiteral>) return render_quoted(v);
        if constexpr (std::is_same_v<T, NumberLiteral>) return render_number(v.value);
        if constexpr (std::is_same_v<T, BooleanLiteral>) return v.value ? "True" : "False";
        if constexpr (std::is_same_v<T, NoneLiteral>) return "None";
        if constexpr (std::is_same_v<T, VarRef>) return v.name;
      },
      value);
}

std::string render_step(const ProgramStep& step) {
  std::string out = step.output + "=" + step.module + "(";
  for (std::size_t i = 0; i < step.args.size(); ++i) {
    if (i) out += ",";
    out += step.args[i].name + "=" + render_arg_value(step.args[i].value);
  }
  return out + ")";
}

std::string render_program(const Program& program) {
  std::string out;
  for (const auto& step : program.steps) {
    out += render_step(step);
    out += '\n';
  }
  return out;
}

}  // namespace vistep::dsl
