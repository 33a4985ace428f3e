#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vistep/dsl.hpp"
#include "vistep/registry.hpp"
#include "vistep/serialize.hpp"

namespace vistep {

struct StepTrace {
  int step = 0;  // 1-based
  std::string text;
  std::vector<std::pair<std::string, Value>> args;
  std::optional<Value> output;
  double wall_ms = 0;
  std::optional<nlohmann::json> error;  // {"code","message","detail"}
};

enum class RunStatus { Ok, Failed };

struct RunRecord {
  std::string run_id;
  std::string source;
  std::map<std::string, Value> inputs;
  std::vector<StepTrace> traces;
  std::optional<Value> result;
  RunStatus status = RunStatus::Ok;

  bool ok() const { return status == RunStatus::Ok; }
  const StepTrace* failed_step() const;

  /// Images are written to `sink` when given. wall-time is omitted unless
  /// `timing` is set so that records of repeated runs compare equal.
  nlohmann::json to_json(ImageStore* sink = nullptr, bool timing = false) const;
  static RunRecord from_json(const nlohmann::json& j, const ImageStore& images);
};

struct ExecuteOptions {
  std::chrono::milliseconds step_timeout = std::chrono::seconds(30);
  std::string run_id;  // empty: derived from program source and inputs
};

/// Literals become Values, VarRefs are looked up, omitted optional arguments
/// take their defaults. Result is in signature order.
/// Throws UnboundVariable, UnknownArgument, DuplicateArgument, MissingArgument,
/// TypeMismatch.
ArgMap resolve_args(const dsl::ProgramStep& step, const ProgramState& state, const ModuleSignature& signature,
                    int step_index);

Value literal_value(const dsl::ArgValue& value);

/// Runs steps in order and stops at the first failure, which is recorded on
/// that step's trace. Never throws for module failures.
RunRecord execute(const dsl::Program& program, const std::map<std::string, Value>& inputs,
                  const Registry& registry, backend::Backend* backend, const ExecuteOptions& options = {});

std::string derive_run_id(const std::string& source, const std::map<std::string, Value>& inputs);

}  // namespace vistep
