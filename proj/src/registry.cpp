#include "vistep/registry.hpp"

#include <cctype>

#include "vistep/error.hpp"

namespace vistep {

std::string upper_case(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

const ArgSpec* ModuleSignature::find_arg(std::string_view arg_name) const {
  for (const auto& a : args) {
    if (a.name == arg_name) return &a;
  }
  return nullptr;
}

void ArgMap::set(std::string name, Value value) {
  for (auto& [k, v] : entries_) {
    if (k == name) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(name), std::move(value));
}

const Value* ArgMap::find(std::string_view name) const {
  for (const auto& [k, v] : entries_) {
    if (k == name) return &v;
  }
  return nullptr;
}

const Value& ArgMap::get(std::string_view name) const {
  if (const auto* v = find(name)) return *v;
  throw Error(ErrorCode::MissingArgument, "missing argument '" + std::string(name) + "'", {{"arg", name}});
}

backend::Backend& ExecContext::require_backend() const {
  if (!backend) throw Error(ErrorCode::BackendError, "this module needs a model backend but none is configured");
  return *backend;
}

void Registry::add(ModuleImpl impl) {
  auto key = upper_case(impl.signature.name);
  if (modules_.contains(key)) {
    throw Error(ErrorCode::DuplicateModule, "module " + key + " is already registered", {{"module", key}});
  }
  modules_.emplace(std::move(key), std::make_shared<const ModuleImpl>(std::move(impl)));
}

const ModuleImpl* Registry::find(std::string_view name) const {
  auto it = modules_.find(upper_case(name));
  return it == modules_.end() ? nullptr : it->second.get();
}

const ModuleImpl& Registry::resolve(std::string_view name) const {
  if (const auto* m = find(name)) return *m;
  throw Error(ErrorCode::UnknownModule, "unknown module '" + std::string(name) + "'", {{"module", name}});
}

std::vector<std::string> Registry::names() const {
  std::vector<std::string> out;
  out.reserve(modules_.size());
  for (const auto& [k, _] : modules_) out.push_back(k);
  return out;
}

}  // namespace vistep
