#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vistep/dsl.hpp"
#include "vistep/registry.hpp"

namespace vistep::gen {

struct InContextExample {
  int id = 0;
  std::string instruction;
  std::string program;
  std::vector<std::string> tags;
};

/// `{"examples":[{"id","instruction","program","tags"}]}` or a bare array.
/// Ids default to the 1-based position. Every program must parse.
std::vector<InContextExample> pool_from_json(const nlohmann::json& j);
std::vector<InContextExample> load_pool(const std::string& path);

enum class Strategy { Random, Curated, Voting };

std::string_view to_string(Strategy s);
std::optional<Strategy> strategy_from_string(std::string_view name);

struct PromptSpec {
  std::string header;                              // may contain {name} placeholders
  std::map<std::string, std::string> header_vars;  // e.g. {"list_max": "20"}
  std::vector<InContextExample> pool;
  int k = 0;
  Strategy strategy = Strategy::Random;
  std::vector<int> curated_ids;
  int runs = 1;  // voting only
};

/// Deterministic index sample without replacement (partial Fisher-Yates on a
/// 64-bit Mersenne Twister, rejection-sampled bounds so the result does not
/// depend on the standard library's distributions).
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t k, std::uint64_t seed);

/// header, k example blocks ("Instruction: ...\nProgram:\n...") and the open
/// block for `instruction`. Throws PoolTooSmall, InvalidArgument.
std::string build_prompt(const PromptSpec& spec, const std::string& instruction, std::uint64_t seed);

/// Instruction of the open block at the end of a prompt.
std::string prompt_instruction(const std::string& prompt);

class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  /// Throws ClientError.
  virtual std::string complete(const std::string& prompt) = 0;
};

/// Recorded completions keyed by sha256 of the full prompt, or by the
/// instruction of the open block.
class ReplayClient final : public CompletionClient {
 public:
  /// `{"completions":[{"instruction"|"prompt_sha256", "completion"}]}` or an
  /// object mapping instruction to completion.
  static ReplayClient from_json(const nlohmann::json& j);
  static ReplayClient load(const std::string& path);

  void add_instruction(std::string instruction, std::string completion);
  void add_prompt(const std::string& prompt, std::string completion);
  std::string complete(const std::string& prompt) override;

 private:
  std::map<std::string, std::string> by_prompt_;
  std::map<std::string, std::string> by_instruction_;
};

/// Rules matched against the instruction in order; the completion is the
/// rule's template with `$1`.. replaced by capture groups.
class ScriptedClient final : public CompletionClient {
 public:
  static ScriptedClient from_json(const nlohmann::json& j);  // {"rules":[{"pattern","template"}]}
  void add_rule(const std::string& pattern, std::string completion_template);
  std::string complete(const std::string& prompt) override;

 private:
  std::vector<std::pair<std::regex, std::string>> rules_;
};

struct RemoteConfig {
  std::string endpoint;                  // base URL, e.g. http://127.0.0.1:8000
  std::string path = "/v1/completions";
  std::string model;
  std::string api_key_env = "VISTEP_API_KEY";  // name of the environment variable
  int max_tokens = 512;
  std::chrono::milliseconds timeout = std::chrono::seconds(60);
};

/// OpenAI-style text completion endpoint (temperature 0, stop at blank line).
class RemoteClient final : public CompletionClient {
 public:
  explicit RemoteClient(RemoteConfig config) : config_(std::move(config)) {}
  std::string complete(const std::string& prompt) override;

 private:
  RemoteConfig config_;
};

/// Leading blank lines removed; cut at the first blank line after the program.
std::string trim_completion(const std::string& completion);

struct Generated {
  std::string prompt;
  std::string completion;
  dsl::Program program;
};

/// Prompt, complete, trim, parse and (with a registry) validate against the
/// given input names. Throws GenerationError carrying the raw completion, or
/// ClientError.
Generated generate_program(const PromptSpec& spec, const std::string& instruction, CompletionClient& client,
                           std::uint64_t seed, const Registry* registry = nullptr,
                           const std::set<std::string>& inputs = {});

/// Lowercased, trimmed answer text.
std::string normalize_answer(std::string_view answer);

/// Plurality over normalized answers; failed runs (nullopt) are skipped; ties go
/// to the answer whose first occurrence is earliest. Throws AllRunsFailed.
std::string vote(const std::vector<std::optional<std::string>>& answers);

}  // namespace vistep::gen
