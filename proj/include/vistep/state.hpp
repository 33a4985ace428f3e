#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vistep/value.hpp"

namespace vistep {

/// True for names matching `[A-Z][A-Z0-9_]*`.
bool is_variable_name(std::string_view name);

/// Append-only variable bindings for one program execution.
class ProgramState {
 public:
  ProgramState() = default;

  /// Throws InvalidIdentifier or DuplicateBinding.
  void bind(const std::string& name, Value value);

  /// Throws UnboundVariable; `step` (1-based) is reported when given.
  const Value& lookup(const std::string& name, std::optional<int> step = std::nullopt) const;

  const Value* find(const std::string& name) const;
  bool contains(const std::string& name) const { return bindings_.contains(name); }
  std::size_t size() const { return order_.size(); }

  /// Names in binding order.
  const std::vector<std::string>& names() const { return order_; }

 private:
  std::map<std::string, Value, std::less<>> bindings_;
  std::vector<std::string> order_;
};

}  // namespace vistep
