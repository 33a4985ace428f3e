#include "vistep/generator.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>

#include <httplib.h>

#include "vistep/codec.hpp"
#include "vistep/error.hpp"
#include "vistep/validate.hpp"

namespace vistep::gen {

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path, {{"path", path}});
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidDocument, path + ": " + e.what(), {{"path", path}});
  }
}

std::string fill_header(const std::string& header, const std::map<std::string, std::string>& vars) {
  std::string out = header;
  for (const auto& [name, value] : vars) {
    const std::string key = "{" + name + "}";
    for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + value.size())) {
      out.replace(pos, key.size(), value);
    }
  }
  return out;
}

std::string trim_right(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  return s;
}

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

void append_block(std::string& out, const std::string& instruction, const std::string& program) {
  out += "Instruction: " + instruction + "\nProgram:\n" + trim_right(program) + "\n\n";
}

}  // namespace

std::vector<InContextExample> pool_from_json(const nlohmann::json& j) {
  const nlohmann::json& list = j.is_object() && j.contains("examples") ? j.at("examples") : j;
  if (!list.is_array()) throw Error(ErrorCode::InvalidDocument, "example pool must be an array");
  std::vector<InContextExample> pool;
  std::set<int> ids;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& e = list[i];
    InContextExample ex;
    try {
      ex.id = e.value("id", static_cast<int>(i) + 1);
      ex.instruction = e.at("instruction").get<std::string>();
      ex.program = e.at("program").get<std::string>();
      ex.tags = e.value("tags", std::vector<std::string>{});
    } catch (const nlohmann::json::exception& err) {
      throw Error(ErrorCode::InvalidDocument, "example " + std::to_string(i + 1) + ": " + err.what());
    }
    try {
      dsl::parse_program(ex.program);
    } catch (const Error& err) {
      throw Error(ErrorCode::InvalidDocument,
                  "example " + std::to_string(ex.id) + " has an invalid program: " + err.what(), {{"id", ex.id}});
    }
    if (!ids.insert(ex.id).second) {
      throw Error(ErrorCode::InvalidDocument, "duplicate example id " + std::to_string(ex.id), {{"id", ex.id}});
    }
    pool.push_back(std::move(ex));
  }
  return pool;
}

std::vector<InContextExample> load_pool(const std::string& path) { return pool_from_json(read_json(path)); }

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Random: return "random";
    case Strategy::Curated: return "curated";
    case Strategy::Voting: return "voting";
  }
  return "random";
}

std::optional<Strategy> strategy_from_string(std::string_view name) {
  if (name == "random") return Strategy::Random;
  if (name == "curated") return Strategy::Curated;
  if (name == "voting") return Strategy::Voting;
  return std::nullopt;
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), 0);
  // Uniform draw in [0, bound) by rejecting the biased tail.
  auto below = [&rng](std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v;
    do {
      v = rng();
    } while (v >= limit);
    return v % bound;
  };
  for (std::size_t i = 0; i < k && i < population; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(below(population - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(std::min(k, population));
  return idx;
}

std::string build_prompt(const PromptSpec& spec, const std::string& instruction, std::uint64_t seed) {
  if (spec.pool.empty()) throw Error(ErrorCode::PoolTooSmall, "example pool is empty", {{"pool", 0}});
  std::vector<const InContextExample*> chosen;
  if (spec.strategy == Strategy::Curated) {
    for (int id : spec.curated_ids) {
      auto it = std::find_if(spec.pool.begin(), spec.pool.end(), [id](const auto& e) { return e.id == id; });
      if (it == spec.pool.end()) {
        throw Error(ErrorCode::InvalidArgument, "curated example " + std::to_string(id) + " is not in the pool",
                    {{"id", id}});
      }
      chosen.push_back(&*it);
    }
  } else {
    if (spec.k < 0) throw Error(ErrorCode::InvalidArgument, "k must not be negative", {{"k", spec.k}});
    if (static_cast<std::size_t>(spec.k) > spec.pool.size()) {
      throw Error(ErrorCode::PoolTooSmall,
                  "cannot sample " + std::to_string(spec.k) + " examples from a pool of " +
                      std::to_string(spec.pool.size()),
                  {{"k", spec.k}, {"pool", spec.pool.size()}});
    }
    for (auto i : sample_indices(spec.pool.size(), static_cast<std::size_t>(spec.k), seed)) {
      chosen.push_back(&spec.pool[i]);
    }
  }

  std::string out;
  const auto header = trim_right(fill_header(spec.header, spec.header_vars));
  if (!header.empty()) out += header + "\n\n";
  for (const auto* e : chosen) append_block(out, e->instruction, e->program);
  out += "Instruction: " + instruction + "\nProgram:\n";
  return out;
}

std::string prompt_instruction(const std::string& prompt) {
  static const std::string marker = "Instruction: ";
  auto pos = prompt.rfind("\n" + marker);
  std::size_t start;
  if (pos == std::string::npos) {
    if (!prompt.starts_with(marker)) return {};
    start = marker.size();
  } else {
    start = pos + 1 + marker.size();
  }
  const auto end = prompt.find('\n', start);
  return prompt.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

// --- clients ------------------------------------------------------------------

ReplayClient ReplayClient::from_json(const nlohmann::json& j) {
  ReplayClient c;
  if (j.is_object() && j.contains("completions")) {
    for (const auto& e : j.at("completions")) {
      const auto completion = e.at("completion").get<std::string>();
      if (e.contains("prompt_sha256")) {
        c.by_prompt_[e.at("prompt_sha256").get<std::string>()] = completion;
      } else {
        c.add_instruction(e.at("instruction").get<std::string>(), completion);
      }
    }
  } else if (j.is_object()) {
    for (const auto& [instruction, completion] : j.items()) c.add_instruction(instruction, completion.get<std::string>());
  } else {
    throw Error(ErrorCode::InvalidDocument, "replay fixtures must be a JSON object");
  }
  return c;
}

ReplayClient ReplayClient::load(const std::string& path) {
  try {
    return from_json(read_json(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidDocument, path + ": " + e.what(), {{"path", path}});
  }
}

void ReplayClient::add_instruction(std::string instruction, std::string completion) {
  by_instruction_[std::move(instruction)] = std::move(completion);
}

void ReplayClient::add_prompt(const std::string& prompt, std::string completion) {
  by_prompt_[codec::sha256_hex(prompt)] = std::move(completion);
}

std::string ReplayClient::complete(const std::string& prompt) {
  if (auto it = by_prompt_.find(codec::sha256_hex(prompt)); it != by_prompt_.end()) return it->second;
  const auto instruction = prompt_instruction(prompt);
  if (auto it = by_instruction_.find(instruction); it != by_instruction_.end()) return it->second;
  throw Error(ErrorCode::ClientError, "no recorded completion for instruction '" + instruction + "'",
              {{"instruction", instruction}, {"prompt_sha256", codec::sha256_hex(prompt)}});
}

ScriptedClient ScriptedClient::from_json(const nlohmann::json& j) {
  ScriptedClient c;
  try {
    for (const auto& r : j.at("rules")) c.add_rule(r.at("pattern").get<std::string>(), r.at("template").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidDocument, std::string("scripted client rules: ") + e.what());
  }
  return c;
}

void ScriptedClient::add_rule(const std::string& pattern, std::string completion_template) {
  try {
    rules_.emplace_back(std::regex(pattern, std::regex::ECMAScript | std::regex::icase), std::move(completion_template));
  } catch (const std::regex_error& e) {
    throw Error(ErrorCode::InvalidArgument, "bad rule pattern '" + pattern + "': " + e.what());
  }
}

std::string ScriptedClient::complete(const std::string& prompt) {
  const auto instruction = prompt_instruction(prompt);
  for (const auto& [re, tmpl] : rules_) {
    std::smatch m;
    if (std::regex_match(instruction, m, re)) return m.format(tmpl);
  }
  throw Error(ErrorCode::ClientError, "no rule matches instruction '" + instruction + "'",
              {{"instruction", instruction}});
}

std::string RemoteClient::complete(const std::string& prompt) {
  httplib::Client client(config_.endpoint);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  nlohmann::json body{{"prompt", prompt},
                      {"max_tokens", config_.max_tokens},
                      {"temperature", 0},
                      {"stop", nlohmann::json::array({"\n\n"})}};
  if (!config_.model.empty()) body["model"] = config_.model;
  auto res = client.Post(config_.path, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::ClientError, "completion request failed: " + httplib::to_string(res.error()),
                {{"endpoint", config_.endpoint}});
  }
  if (res->status != 200) {
    throw Error(ErrorCode::ClientError, "completion endpoint answered HTTP " + std::to_string(res->status),
                {{"status", res->status}, {"body", res->body.substr(0, 2000)}});
  }
  auto j = nlohmann::json::parse(res->body, nullptr, false);
  if (!j.is_object() || !j.contains("choices") || j.at("choices").empty() || !j.at("choices")[0].contains("text")) {
    throw Error(ErrorCode::ClientError, "completion response has no choices[0].text");
  }
  return j.at("choices")[0].at("text").get<std::string>();
}

// --- generation ---------------------------------------------------------------

std::string trim_completion(const std::string& completion) {
  std::vector<std::string> kept;
  std::size_t pos = 0;
  bool started = false;
  while (pos <= completion.size()) {
    auto nl = completion.find('\n', pos);
    std::string line = completion.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) {
      if (started) break;
    } else {
      started = true;
      kept.push_back(std::move(line));
    }
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  std::string out;
  for (const auto& l : kept) out += l + "\n";
  return out;
}

Generated generate_program(const PromptSpec& spec, const std::string& instruction, CompletionClient& client,
                           std::uint64_t seed, const Registry* registry, const std::set<std::string>& inputs) {
  Generated g;
  g.prompt = build_prompt(spec, instruction, seed);
  g.completion = client.complete(g.prompt);
  const auto text = trim_completion(g.completion);
  try {
    g.program = dsl::parse_program(text);
  } catch (const Error& e) {
    nlohmann::json detail{{"raw", g.completion}, {"reason", e.what()}};
    if (e.detail().contains("diagnostics")) detail["diagnostics"] = e.detail().at("diagnostics");
    throw Error(ErrorCode::GenerationError, "generated program does not parse: " + std::string(e.what()), detail);
  }
  if (registry) {
    auto report = dsl::validate(g.program, *registry, inputs);
    if (!report.ok()) {
      throw Error(ErrorCode::GenerationError, "generated program fails validation: " + report.issues.front().message,
                  {{"raw", g.completion}, {"validation", report.to_json()}});
    }
  }
  return g;
}

std::string normalize_answer(std::string_view answer) {
  std::size_t b = 0;
  std::size_t e = answer.size();
  while (b < e && std::isspace(static_cast<unsigned char>(answer[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(answer[e - 1]))) --e;
  std::string out(answer.substr(b, e - b));
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string vote(const std::vector<std::optional<std::string>>& answers) {
  std::vector<std::pair<std::string, int>> tally;  // first-occurrence order
  for (const auto& a : answers) {
    if (!a) continue;
    auto key = normalize_answer(*a);
    auto it = std::find_if(tally.begin(), tally.end(), [&](const auto& t) { return t.first == key; });
    if (it == tally.end()) {
      tally.emplace_back(std::move(key), 1);
    } else {
      ++it->second;
    }
  }
  if (tally.empty()) throw Error(ErrorCode::AllRunsFailed, "every run failed", {{"runs", answers.size()}});
  const auto* best = &tally.front();
  for (const auto& t : tally) {
    if (t.second > best->second) best = &t;
  }
  return best->first;
}

}  // namespace vistep::gen
