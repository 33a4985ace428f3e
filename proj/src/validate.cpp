#include "vistep/validate.hpp"

namespace vistep::dsl {

namespace {

KindSet literal_kind(const ArgValue& v) {
  if (std::holds_alternative<TextLiteral>(v)) return {ValueKind::Text};
  if (std::holds_alternative<NumberLiteral>(v)) return {ValueKind::Number};
  if (std::holds_alternative<BooleanLiteral>(v)) return {ValueKind::Boolean};
  return {ValueKind::Null};
}

bool intersects(const KindSet& a, const KindSet& b) {
  for (int k = 0; k <= static_cast<int>(ValueKind::TextList); ++k) {
    auto kind = static_cast<ValueKind>(k);
    if (a.contains(kind) && b.contains(kind)) return true;
  }
  return false;
}

}  // namespace

std::string_view to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::UnknownModule: return "UnknownModule";
    case IssueKind::UnknownArgument: return "UnknownArgument";
    case IssueKind::MissingArgument: return "MissingArgument";
    case IssueKind::DuplicateArgument: return "DuplicateArgument";
    case IssueKind::UndefinedVariable: return "UndefinedVariable";
    case IssueKind::OutputCollision: return "OutputCollision";
    case IssueKind::TypeMismatch: return "TypeMismatch";
  }
  return "Unknown";
}

nlohmann::json ValidationReport::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& i : issues) {
    arr.push_back({{"step", i.step}, {"kind", to_string(i.kind)}, {"name", i.name}, {"message", i.message}});
  }
  return {{"ok", ok()}, {"issues", std::move(arr)}};
}

ValidationReport validate(const Program& program, const Registry& registry, const std::set<std::string>& inputs) {
  InputKinds kinds;
  for (const auto& n : inputs) kinds.emplace(n, std::nullopt);
  return validate(program, registry, kinds);
}

ValidationReport validate(const Program& program, const Registry& registry, const InputKinds& inputs) {
  ValidationReport report;
  std::map<std::string, KindSet> defined;
  for (const auto& [name, kind] : inputs) defined.emplace(name, kind ? KindSet{*kind} : KindSet::any());

  auto add = [&](int step, IssueKind kind, std::string name, std::string message) {
    report.issues.push_back({step, kind, std::move(name), std::move(message)});
  };

  for (std::size_t i = 0; i < program.steps.size(); ++i) {
    const auto& step = program.steps[i];
    const int index = static_cast<int>(i) + 1;
    const ModuleImpl* impl = registry.find(step.module);
    if (!impl) add(index, IssueKind::UnknownModule, step.module, "unknown module '" + step.module + "'");

    std::set<std::string> seen;
    for (const auto& arg : step.args) {
      if (!seen.insert(arg.name).second) {
        add(index, IssueKind::DuplicateArgument, arg.name, "argument '" + arg.name + "' given more than once");
      }
      KindSet provided;
      if (const auto* ref = std::get_if<VarRef>(&arg.value)) {
        auto it = defined.find(ref->name);
        if (it == defined.end()) {
          add(index, IssueKind::UndefinedVariable, ref->name, "variable " + ref->name + " is used before it is defined");
          continue;
        }
        provided = it->second;
      } else {
        provided = literal_kind(arg.value);
      }
      if (!impl) continue;
      const ArgSpec* spec = impl->signature.find_arg(arg.name);
      if (!spec) {
        add(index, IssueKind::UnknownArgument, arg.name,
            "module " + impl->signature.name + " has no argument '" + arg.name + "'");
        continue;
      }
      if (!intersects(provided, spec->kinds)) {
        add(index, IssueKind::TypeMismatch, arg.name,
            "argument '" + arg.name + "' expects " + spec->kinds.describe() + " but gets " + provided.describe());
      }
    }
    if (impl) {
      for (const auto& spec : impl->signature.args) {
        if (spec.required && !seen.contains(spec.name)) {
          add(index, IssueKind::MissingArgument, spec.name,
              "module " + impl->signature.name + " requires argument '" + spec.name + "'");
        }
      }
    }
    if (defined.contains(step.output)) {
      add(index, IssueKind::OutputCollision, step.output, "variable " + step.output + " is already defined");
    } else {
      defined.emplace(step.output, impl ? impl->signature.output : KindSet::any());
    }
  }
  return report;
}

}  // namespace vistep::dsl
