#include "vistep/state.hpp"

#include "vistep/error.hpp"

namespace vistep {

bool is_variable_name(std::string_view name) {
  if (name.empty() || name[0] < 'A' || name[0] > 'Z') return false;
  for (char c : name.substr(1)) {
    bool ok = (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
    if (!ok) return false;
  }
  return true;
}

void ProgramState::bind(const std::string& name, Value value) {
  if (!is_variable_name(name)) {
    throw Error(ErrorCode::InvalidIdentifier, "'" + name + "' is not a valid variable name", {{"name", name}});
  }
  if (bindings_.contains(name)) {
    throw Error(ErrorCode::DuplicateBinding, "variable " + name + " is already bound", {{"name", name}});
  }
  bindings_.emplace(name, std::move(value));
  order_.push_back(name);
}

const Value& ProgramState::lookup(const std::string& name, std::optional<int> step) const {
  if (const auto* v = find(name)) return *v;
  nlohmann::json detail{{"name", name}};
  std::string msg = "variable " + name + " is not bound";
  if (step) {
    detail["step"] = *step;
    msg += " (requested by step " + std::to_string(*step) + ")";
  }
  throw Error(ErrorCode::UnboundVariable, msg, std::move(detail));
}

const Value* ProgramState::find(const std::string& name) const {
  auto it = bindings_.find(name);
  return it == bindings_.end() ? nullptr : &it->second;
}

}  // namespace vistep
