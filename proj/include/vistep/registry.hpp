#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vistep/state.hpp"
#include "vistep/value.hpp"

namespace vistep {

namespace backend {
class Backend;
}

struct ArgSpec {
  std::string name;
  KindSet kinds;
  bool required = true;
  Value default_value;  // used when an optional argument is omitted
};

struct ModuleSignature {
  std::string name;
  std::vector<ArgSpec> args;
  KindSet output;
  std::string description;

  const ArgSpec* find_arg(std::string_view arg_name) const;
};

/// Resolved arguments of one step, in signature order.
class ArgMap {
 public:
  void set(std::string name, Value value);
  const Value& get(std::string_view name) const;  // throws MissingArgument
  const Value* find(std::string_view name) const;
  const std::vector<std::pair<std::string, Value>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, Value>> entries_;
};

struct ExecContext {
  const ArgMap& args;
  const ProgramState& state;
  backend::Backend* backend = nullptr;
  int step = 0;  // 1-based
  std::chrono::steady_clock::time_point deadline = std::chrono::steady_clock::time_point::max();

  backend::Backend& require_backend() const;
};

using ExecuteFn = std::function<Value(const ExecContext&)>;
/// One-line caption for the step's rationale cell.
using SummarizeFn = std::function<std::string(const ArgMap&, const Value&)>;

struct ModuleImpl {
  ModuleSignature signature;
  ExecuteFn execute;
  SummarizeFn summarize;
};

/// Module lookup by case-insensitive name. Populate at startup, then share
/// read-only.
class Registry {
 public:
  /// Throws DuplicateModule.
  void add(ModuleImpl impl);

  /// Throws UnknownModule.
  const ModuleImpl& resolve(std::string_view name) const;
  const ModuleImpl* find(std::string_view name) const;

  std::vector<std::string> names() const;
  std::size_t size() const { return modules_.size(); }

 private:
  std::map<std::string, std::shared_ptr<const ModuleImpl>, std::less<>> modules_;
};

std::string upper_case(std::string_view s);

}  // namespace vistep
