#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vistep/error.hpp"

namespace vistep::dsl {

/// Quoted text. `quote` remembers the delimiter so rendering reproduces the source.
struct TextLiteral {
  std::string value;
  char quote = '\'';
  friend bool operator==(const TextLiteral&, const TextLiteral&) = default;
};
struct NumberLiteral {
  double value = 0;
  friend bool operator==(const NumberLiteral&, const NumberLiteral&) = default;
};
struct BooleanLiteral {
  bool value = false;
  friend bool operator==(const BooleanLiteral&, const BooleanLiteral&) = default;
};
struct NoneLiteral {
  friend bool operator==(const NoneLiteral&, const NoneLiteral&) = default;
};
struct VarRef {
  std::string name;
  friend bool operator==(const VarRef&, const VarRef&) = default;
};

using ArgValue = std::variant<TextLiteral, NumberLiteral, BooleanLiteral, NoneLiteral, VarRef>;

struct Arg {
  std::string name;
  ArgValue value;
  friend bool operator==(const Arg&, const Arg&) = default;
};

/// `OUTPUT=MODULE(name=value,...)`
struct ProgramStep {
  std::string output;
  std::string module;
  std::vector<Arg> args;
  friend bool operator==(const ProgramStep&, const ProgramStep&) = default;
};

struct Program {
  std::vector<ProgramStep> steps;
  std::vector<int> lines;  // 1-based source line of each step
  std::string source;
};

/// One positioned parse failure. Columns and lines are 1-based; `line` is 0
/// when parsing a lone step.
struct Diagnostic {
  int line = 0;
  int column = 0;
  std::string message;
  std::vector<std::string> expected;

  std::string to_string() const;
};

class SyntaxError : public Error {
 public:
  explicit SyntaxError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// Throws SyntaxError with a single diagnostic.
ProgramStep parse_step(std::string_view line);

/// One step per non-blank line; blank lines and `#` comments are skipped.
/// Throws SyntaxError aggregating every bad line, or Error{EmptyProgram}.
Program parse_program(std::string_view source);

/// Canonical text: no whitespace between tokens.
std::string render_step(const ProgramStep& step);
std::string render_program(const Program& program);
std::string render_arg_value(const ArgValue& value);

}  // namespace vistep::dsl
