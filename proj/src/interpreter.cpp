#include "vistep/interpreter.hpp"

#include <set>

#include "vistep/codec.hpp"
#include "vistep/error.hpp"

namespace vistep {

namespace {

nlohmann::json error_json(const std::exception& e) {
  if (const auto* ve = dynamic_cast<const Error*>(&e)) return ve->to_json();
  return {{"code", "InternalError"}, {"message", e.what()}, {"detail", nlohmann::json::object()}};
}

std::string_view status_name(RunStatus s) { return s == RunStatus::Ok ? "ok" : "failed"; }

}  // namespace

Value literal_value(const dsl::ArgValue& value) {
  return std::visit(
      [](const auto& v) -> Value {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, dsl::TextLiteral>) return Value::text(v.value);
        else if constexpr (std::is_same_v<T, dsl::NumberLiteral>) return Value::number(v.value);
        else if constexpr (std::is_same_v<T, dsl::BooleanLiteral>) return Value::boolean(v.value);
        else if constexpr (std::is_same_v<T, dsl::NoneLiteral>) return Value::null();
        else throw Error(ErrorCode::InvalidArgument, "variable reference is not a literal");
      },
      value);
}

ArgMap resolve_args(const dsl::ProgramStep& step, const ProgramState& state, const ModuleSignature& signature,
                    int step_index) {
  std::map<std::string, Value> given;
  for (const auto& arg : step.args) {
    const ArgSpec* spec = signature.find_arg(arg.name);
    if (!spec) {
      throw Error(ErrorCode::UnknownArgument, "module " + signature.name + " has no argument '" + arg.name + "'",
                  {{"module", signature.name}, {"arg", arg.name}, {"step", step_index}});
    }
    if (given.contains(arg.name)) {
      throw Error(ErrorCode::DuplicateArgument, "argument '" + arg.name + "' given more than once",
                  {{"arg", arg.name}, {"step", step_index}});
    }
    Value v;
    if (const auto* ref = std::get_if<dsl::VarRef>(&arg.value)) {
      v = state.lookup(ref->name, step_index);
    } else {
      v = literal_value(arg.value);
    }
    if (!spec->kinds.contains(v.kind())) {
      throw Error(ErrorCode::TypeMismatch,
                  "argument '" + arg.name + "' of " + signature.name + " expects " + spec->kinds.describe() +
                      " but got " + std::string(to_string(v.kind())),
                  {{"arg", arg.name},
                   {"expected", spec->kinds.describe()},
                   {"actual", to_string(v.kind())},
                   {"step", step_index}});
    }
    given.emplace(arg.name, std::move(v));
  }
  ArgMap out;
  for (const auto& spec : signature.args) {
    if (auto it = given.find(spec.name); it != given.end()) {
      out.set(spec.name, it->second);
    } else if (spec.required) {
      throw Error(ErrorCode::MissingArgument, "module " + signature.name + " requires argument '" + spec.name + "'",
                  {{"module", signature.name}, {"arg", spec.name}, {"step", step_index}});
    } else {
      out.set(spec.name, spec.default_value);
    }
  }
  return out;
}

std::string derive_run_id(const std::string& source, const std::map<std::string, Value>& inputs) {
  nlohmann::json j{{"source", source}};
  for (const auto& [name, v] : inputs) j["inputs"][name] = value_to_json(v, nullptr);
  return codec::sha256_hex(j.dump()).substr(0, 16);
}

RunRecord execute(const dsl::Program& program, const std::map<std::string, Value>& inputs,
                  const Registry& registry, backend::Backend* backend, const ExecuteOptions& options) {
  using clock = std::chrono::steady_clock;
  RunRecord run;
  run.source = program.source.empty() ? dsl::render_program(program) : program.source;
  run.inputs = inputs;
  run.run_id = options.run_id.empty() ? derive_run_id(run.source, inputs) : options.run_id;

  ProgramState state;
  std::optional<Value> result_step_value;
  for (const auto& [name, v] : inputs) state.bind(name, v);

  for (std::size_t i = 0; i < program.steps.size(); ++i) {
    const auto& step = program.steps[i];
    StepTrace trace;
    trace.step = static_cast<int>(i) + 1;
    trace.text = dsl::render_step(step);
    const auto start = clock::now();
    try {
      const ModuleImpl& impl = registry.resolve(step.module);
      ArgMap args = resolve_args(step, state, impl.signature, trace.step);
      trace.args = args.entries();
      ExecContext ctx{args, state, backend, trace.step, start + options.step_timeout};
      Value out = impl.execute(ctx);
      const auto elapsed = clock::now() - start;
      if (elapsed > options.step_timeout) {
        throw Error(ErrorCode::StepTimeout, "step " + std::to_string(trace.step) + " exceeded its time limit",
                    {{"step", trace.step}, {"timeout_ms", options.step_timeout.count()}});
      }
      state.bind(step.output, out);
      if (upper_case(step.module) == "RESULT") result_step_value = out;
      trace.output = std::move(out);
    } catch (const std::exception& e) {
      trace.error = error_json(e);
    }
    trace.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
    const bool failed = trace.error.has_value();
    run.traces.push_back(std::move(trace));
    if (failed) {
      run.status = RunStatus::Failed;
      return run;
    }
  }
  if (run.traces.empty()) {
    run.status = RunStatus::Failed;
    return run;
  }
  run.result = result_step_value ? result_step_value : run.traces.back().output;
  run.status = RunStatus::Ok;
  return run;
}

const StepTrace* RunRecord::failed_step() const {
  for (const auto& t : traces) {
    if (t.error) return &t;
  }
  return nullptr;
}

nlohmann::json RunRecord::to_json(ImageStore* sink, bool timing) const {
  nlohmann::json j;
  j["run_id"] = run_id;
  j["source"] = source;
  j["status"] = status_name(status);
  j["inputs"] = nlohmann::json::object();
  for (const auto& [name, v] : inputs) j["inputs"][name] = value_to_json(v, sink);
  auto traces_json = nlohmann::json::array();
  for (const auto& t : traces) {
    nlohmann::json tj{{"step", t.step}, {"text", t.text}};
    auto args = nlohmann::json::array();
    for (const auto& [name, v] : t.args) args.push_back({{"name", name}, {"value", value_to_json(v, sink)}});
    tj["args"] = std::move(args);
    tj["output"] = t.output ? value_to_json(*t.output, sink) : nlohmann::json();
    tj["error"] = t.error ? *t.error : nlohmann::json();
    if (timing) tj["wall_ms"] = t.wall_ms;
    traces_json.push_back(std::move(tj));
  }
  j["traces"] = std::move(traces_json);
  j["result"] = result ? value_to_json(*result, sink) : nlohmann::json();
  return j;
}

RunRecord RunRecord::from_json(const nlohmann::json& j, const ImageStore& images) {
  try {
    RunRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.source = j.at("source").get<std::string>();
    r.status = j.at("status").get<std::string>() == "ok" ? RunStatus::Ok : RunStatus::Failed;
    for (const auto& [name, v] : j.at("inputs").items()) r.inputs.emplace(name, value_from_json(v, images));
    for (const auto& tj : j.at("traces")) {
      StepTrace t;
      t.step = tj.at("step").get<int>();
      t.text = tj.at("text").get<std::string>();
      for (const auto& a : tj.at("args")) {
        t.args.emplace_back(a.at("name").get<std::string>(), value_from_json(a.at("value"), images));
      }
      if (!tj.at("output").is_null()) t.output = value_from_json(tj.at("output"), images);
      if (!tj.at("error").is_null()) t.error = tj.at("error");
      t.wall_ms = tj.value("wall_ms", 0.0);
      r.traces.push_back(std::move(t));
    }
    if (!j.at("result").is_null()) r.result = value_from_json(j.at("result"), images);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidDocument, std::string("malformed run record: ") + e.what());
  }
}

}  // namespace vistep
