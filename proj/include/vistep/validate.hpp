#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vistep/dsl.hpp"
#include "vistep/registry.hpp"

namespace vistep::dsl {

enum class IssueKind {
  UnknownModule,
  UnknownArgument,
  MissingArgument,
  DuplicateArgument,
  UndefinedVariable,
  OutputCollision,
  TypeMismatch,
};

std::string_view to_string(IssueKind kind);

struct Issue {
  int step = 0;  // 1-based step index
  IssueKind kind;
  std::string name;  // module, argument or variable concerned
  std::string message;
};

struct ValidationReport {
  std::vector<Issue> issues;

  bool ok() const { return issues.empty(); }
  nlohmann::json to_json() const;
};

/// Declared program inputs; a kind of nullopt means "unknown, accept anything".
using InputKinds = std::map<std::string, std::optional<ValueKind>>;

ValidationReport validate(const Program& program, const Registry& registry, const InputKinds& inputs);
ValidationReport validate(const Program& program, const Registry& registry, const std::set<std::string>& inputs);

}  // namespace vistep::dsl
