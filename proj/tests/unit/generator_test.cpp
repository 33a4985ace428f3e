#include <doctest.h>

#include "helpers.hpp"
#include "testkit.hpp"
#include "vistep/generator.hpp"
#include "vistep/modules.hpp"

using namespace vistep;
using namespace vistep::gen;

namespace {

std::vector<InContextExample> pool_of(int n) {
  std::vector<InContextExample> out;
  for (int i = 1; i <= n; ++i) {
    out.push_back({i, "question " + std::to_string(i), "ANSWER0=VQA(image=IMAGE,question='q" + std::to_string(i) + "')\n"
                                                       "FINAL_RESULT=RESULT(var=ANSWER0)",
                   {}});
  }
  return out;
}

PromptSpec spec_of(int pool, int k) {
  PromptSpec s;
  s.header = "Answer with a program. Lists hold at most {list_max} items.";
  s.header_vars = {{"list_max", "20"}};
  s.pool = pool_of(pool);
  s.k = k;
  return s;
}

std::size_t blocks(const std::string& prompt) {
  std::size_t n = 0;
  for (auto at = prompt.find("Instruction: "); at != std::string::npos; at = prompt.find("Instruction: ", at + 1)) ++n;
  return n - 1;  // the open block
}

}  // namespace

TEST_CASE("random prompts hold k examples") {
  const auto spec = spec_of(31, 3);
  const auto p = build_prompt(spec, "Is the cat left of the dog?", 0);
  CHECK(blocks(p) == 3);
  CHECK(p.rfind("Instruction: Is the cat left of the dog?\nProgram:\n") == p.size() - 50);
  CHECK(p.find("at most 20 items") != std::string::npos);
  CHECK(p == build_prompt(spec, "Is the cat left of the dog?", 0));
  CHECK(prompt_instruction(p) == "Is the cat left of the dog?");
}

TEST_CASE("different seeds pick different examples") {
  const auto spec = spec_of(31, 3);
  std::set<std::string> prompts;
  for (std::uint64_t seed = 0; seed < 20; ++seed) prompts.insert(build_prompt(spec, "x", seed));
  CHECK(prompts.size() > 15);
}

TEST_CASE("curated prompts follow the listed ids") {
  auto spec = spec_of(31, 0);
  spec.strategy = Strategy::Curated;
  spec.curated_ids = {1, 4, 7};
  const auto p = build_prompt(spec, "x", 99);
  CHECK(blocks(p) == 3);
  const auto a = p.find("question 1\n");
  const auto b = p.find("question 4\n");
  const auto c = p.find("question 7\n");
  CHECK(a < b);
  CHECK(b < c);
  CHECK(c != std::string::npos);
  spec.curated_ids = {1, 99};
  CHECK(code_of([&] { (void)build_prompt(spec, "x", 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("pool too small") {
  CHECK(code_of([] { (void)build_prompt(spec_of(31, 40), "x", 0); }) == ErrorCode::PoolTooSmall);
  CHECK(code_of([] { (void)build_prompt(spec_of(0, 0), "x", 0); }) == ErrorCode::PoolTooSmall);
}

TEST_CASE("sample indices are distinct, in range and reproducible") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto idx = sample_indices(31, 7, seed);
    CHECK(idx == sample_indices(31, 7, seed));
    CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 7);
    for (auto i : idx) CHECK(i < 31);
  }
  std::array<int, 5> hits{};
  for (std::uint64_t seed = 0; seed < 5000; ++seed) ++hits[sample_indices(5, 1, seed)[0]];
  for (int h : hits) CHECK(std::abs(h - 1000) < 150);
}

TEST_CASE("pools load from files") {
  for (const char* name : {"qa", "pairqa", "tagging", "editing"}) {
    const auto pool = load_pool(testkit::data_dir() + "/pools/" + name + ".json");
    CHECK(pool.size() >= 5);
  }
  const auto bare = pool_from_json(nlohmann::json::parse(R"j([{"instruction": "a", "program": "X=EVAL(expr='1')"}])j"));
  CHECK(bare[0].id == 1);
  CHECK(code_of([] { (void)pool_from_json(nlohmann::json::parse(R"j([{"instruction": "a", "program": "X=("}])j")); }) ==
        ErrorCode::InvalidDocument);
}

TEST_CASE("generate with a replay fixture") {
  ReplayClient client;
  client.add_instruction("Is there a dog?",
                         "ANSWER0=VQA(image=IMAGE,question='Is there a dog?')\nFINAL_RESULT=RESULT(var=ANSWER0)\n");
  const Registry reg = standard_registry();
  const auto g = generate_program(spec_of(31, 3), "Is there a dog?", client, 1, &reg, {"IMAGE"});
  CHECK(g.program.steps.size() == 2);
  CHECK(code_of([&] { (void)generate_program(spec_of(31, 3), "unknown", client, 1); }) == ErrorCode::ClientError);
}

TEST_CASE("replay by prompt hash wins over instruction") {
  const auto spec = spec_of(31, 2);
  const auto prompt = build_prompt(spec, "q", 3);
  ReplayClient client;
  client.add_instruction("q", "A=EVAL(expr='1')");
  client.add_prompt(prompt, "A=EVAL(expr='2')");
  CHECK(client.complete(prompt) == "A=EVAL(expr='2')");
  CHECK(client.complete(build_prompt(spec, "q", 4)) == "A=EVAL(expr='1')");
}

TEST_CASE("completions are trimmed") {
  CHECK(trim_completion("\n\nA=EVAL(expr='1')\nB=RESULT(var=A)\n\nThis program adds.\nC=X()") ==
        "A=EVAL(expr='1')\nB=RESULT(var=A)\n");
  ReplayClient client;
  client.add_instruction("q", "A=EVAL(expr='1')\n\nSome prose that is not a program.");
  CHECK(generate_program(spec_of(3, 1), "q", client, 0).program.steps.size() == 1);
}

TEST_CASE("unparseable completions keep the raw text") {
  ReplayClient client;
  client.add_instruction("q", "garbage(");
  try {
    (void)generate_program(spec_of(3, 1), "q", client, 0);
    FAIL("parsed garbage");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GenerationError);
    CHECK(e.detail().at("raw") == "garbage(");
  }
  client.add_instruction("v", "A=COUNT(box=NOPE)");
  const Registry reg = standard_registry();
  CHECK(code_of([&] { (void)generate_program(spec_of(3, 1), "v", client, 0, &reg, {"IMAGE"}); }) ==
        ErrorCode::GenerationError);
}

TEST_CASE("scripted client fills templates") {
  auto client = ScriptedClient::from_json(nlohmann::json::parse(
      R"j({"rules": [{"pattern": "How many (\\w+) are there\\?", "template": "B=LOC(image=IMAGE,object='$1')\nA=COUNT(box=B)"}]})j"));
  const auto g = generate_program(spec_of(3, 1), "How many cats are there?", client, 0);
  CHECK(dsl::render_step(g.program.steps[0]) == "B=LOC(image=IMAGE,object='cats')");
  CHECK(code_of([&] { (void)client.complete(build_prompt(spec_of(3, 1), "Other", 0)); }) == ErrorCode::ClientError);
}

TEST_CASE("remote client reports connection failures") {
  RemoteConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1";
  cfg.timeout = std::chrono::milliseconds(500);
  RemoteClient client(cfg);
  CHECK(code_of([&] { (void)client.complete("x"); }) == ErrorCode::ClientError);
}

TEST_CASE("voting") {
  using A = std::vector<std::optional<std::string>>;
  CHECK(vote(A{"left", "left", "right", "left", "right"}) == "left");
  CHECK(vote(A{"left", "right"}) == "left");
  CHECK(vote(A{"right", "left"}) == "right");
  CHECK(vote(A{std::nullopt, " Yes", "no", "yes ", std::nullopt}) == "yes");
  CHECK(code_of([] { (void)vote(A{std::nullopt, std::nullopt}); }) == ErrorCode::AllRunsFailed);
  CHECK(code_of([] { (void)vote(A{}); }) == ErrorCode::AllRunsFailed);
  CHECK(normalize_answer("  LeFt \n") == "left");
}

TEST_CASE("voting matches the counting oracle on every 5-run sequence") {
  const auto r = testkit::run_vote_suite();
  CHECK(r.cases == 1024);
  CHECK(r.mismatches == 0);
}
