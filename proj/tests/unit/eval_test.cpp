#include <doctest.h>

#include <filesystem>

#include "helpers.hpp"
#include "testkit.hpp"
#include "vistep/eval.hpp"
#include "vistep/modules.hpp"

using namespace vistep;
using namespace vistep::eval;
namespace fs = std::filesystem;

namespace {

ObjectRegion pred(Box b, std::optional<std::string> tag) {
  ObjectRegion r;
  r.box = b;
  r.tag = std::move(tag);
  return r;
}

}  // namespace

TEST_CASE("perfect prediction") {
  const std::vector<GoldObject> gold{{{0, 0, 10, 10}, "Amy"}, {{20, 0, 30, 10}, "Bob"}};
  const auto m = match_tagging({pred({0, 0, 10, 10}, "amy "), pred({20, 0, 30, 10}, "Bob")}, gold);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  CHECK(m.pairs.size() == 2);
}

TEST_CASE("localization ignores the tag") {
  const std::vector<GoldObject> gold{{{0, 0, 10, 10}, "Amy"}};
  const ObjectList preds{pred({0, 0, 10, 10}, "Bob")};
  CHECK(match_tagging(preds, gold, 0.5, MatchMode::Localization).precision == 1.0);
  CHECK(match_tagging(preds, gold, 0.5, MatchMode::Tagging).precision == 0.0);
}

TEST_CASE("matching is one to one") {
  const std::vector<GoldObject> gold{{{0, 0, 10, 10}, "a"}};
  const ObjectList preds{pred({0, 0, 10, 10}, "a"), pred({0, 0, 10, 9}, "a")};
  const auto m = match_tagging(preds, gold);
  CHECK(m.pairs.size() == 1);
  CHECK(m.pairs[0].pred == 0);
  CHECK(m.precision == 0.5);
  CHECK(m.recall == 1.0);
  CHECK(testkit::best_matching_size(preds, gold, 0.5, MatchMode::Tagging) == 1);
}

TEST_CASE("empty sides") {
  CHECK(match_tagging({}, {}).precision == 1.0);
  CHECK(match_tagging({}, {}).recall == 1.0);
  CHECK(match_tagging({}, {{{0, 0, 1, 1}, "a"}}).precision == 0.0);
  CHECK(match_tagging({pred({0, 0, 1, 1}, "a")}, {}).recall == 1.0);
  CHECK(match_tagging({pred({0, 0, 1, 1}, "a")}, {}).precision == 0.0);
}

TEST_CASE("greedy matching is valid and never beats the exhaustive optimum") {
  std::mt19937_64 rng(17);
  auto box = [&] {
    const double x = static_cast<double>(rng() % 20);
    const double y = static_cast<double>(rng() % 20);
    return Box{x, y, x + 4 + static_cast<double>(rng() % 8), y + 4 + static_cast<double>(rng() % 8)};
  };
  const char* names[] = {"a", "b", "c"};
  for (int i = 0; i < 300; ++i) {
    ObjectList preds;
    std::vector<GoldObject> gold;
    for (std::size_t k = rng() % 5; k > 0; --k) preds.push_back(pred(box(), names[rng() % 3]));
    for (std::size_t k = rng() % 5; k > 0; --k) gold.push_back({box(), names[rng() % 3]});
    for (auto mode : {MatchMode::Localization, MatchMode::Tagging}) {
      const auto m = match_tagging(preds, gold, 0.3, mode);
      std::set<std::size_t> ps, gs;
      for (const auto& p : m.pairs) {
        CHECK(ps.insert(p.pred).second);
        CHECK(gs.insert(p.gold).second);
        CHECK(p.iou >= 0.3);
        CHECK(p.iou == doctest::Approx(iou(preds[p.pred].box, gold[p.gold].box)));
      }
      CHECK(m.pairs.size() <= testkit::best_matching_size(preds, gold, 0.3, mode));
      if (!preds.empty()) CHECK(m.precision == doctest::Approx(double(m.pairs.size()) / preds.size()));
      if (!gold.empty()) CHECK(m.recall == doctest::Approx(double(m.pairs.size()) / gold.size()));
    }
  }
}

TEST_CASE("aggregate f1 reproduces the published rows") {
  struct Row {
    double p, r, f1;
  };
  for (const Row& row : {Row{69.0, 59.1, 63.7}, Row{77.6, 73.9, 75.7}, Row{87.2, 74.9, 80.6}}) {
    const auto f = f1_of(row.p, row.r);
    CHECK(std::abs(f.f1 - row.f1) <= 0.05);
    CHECK(std::abs(100 * aggregate_f1({{row.p / 100, row.r / 100}}).f1 - row.f1) <= 0.05);
  }
  const auto f = aggregate_f1({{1.0, 0.5}, {0.5, 0.5}});
  CHECK(f.precision == doctest::Approx(0.75));
  CHECK(f.recall == doctest::Approx(0.5));
  CHECK(f.f1 == doctest::Approx(0.6));
  CHECK(f1_of(0, 0).f1 == 0.0);
  CHECK(code_of([] { (void)aggregate_f1({}); }) == ErrorCode::EmptySet);
}

TEST_CASE("accuracy") {
  using P = std::vector<std::optional<std::string>>;
  CHECK(accuracy(P{"a", "B "}, {"a", "b"}) == 1.0);
  CHECK(accuracy(P{"a", "b", "c", "x", "y"}, {"a", "b", "c", "d", "e"}) == doctest::Approx(0.6));
  CHECK(accuracy(P{std::nullopt, "b"}, {"a", "b"}) == 0.5);
  CHECK(code_of([] { (void)accuracy(P{"a"}, {"a", "b"}); }) == ErrorCode::LengthMismatch);
  CHECK(code_of([] { (void)accuracy(P{}, {}); }) == ErrorCode::EmptySet);
}

TEST_CASE("answer text") {
  CHECK(answer_text(Value::number(3)) == "3");
  CHECK(answer_text(Value::boolean(false)) == "False");
  CHECK(answer_text(Value::text("left")) == "left");
}

TEST_CASE("run seeds are distinct per record and run") {
  std::set<std::uint64_t> seen;
  for (std::size_t i = 0; i < 50; ++i) {
    for (int r = 0; r < 5; ++r) seen.insert(run_seed(7, i, r));
  }
  CHECK(seen.size() == 250);
  CHECK(run_seed(7, 0, 0) == 7);
}

TEST_CASE("stratified sample") {
  Dataset d;
  for (int i = 0; i < 30; ++i) {
    EvalRecord r;
    r.id = std::to_string(i);
    r.question_type = i % 3 == 0 ? "count" : "relate";
    d.records.push_back(r);
  }
  const auto idx = stratified_sample(d, 4, 1);
  CHECK(idx.size() == 8);
  CHECK(std::is_sorted(idx.begin(), idx.end()));
  CHECK(idx == stratified_sample(d, 4, 1));
  std::size_t count = 0;
  for (auto i : idx) count += d.records[i].question_type == "count";
  CHECK(count == 4);
}

TEST_CASE("dataset documents") {
  auto scenes = [](const backend::Scene& s) { return backend::render_scene(s); };
  const auto d = load_dataset(testkit::data_dir() + "/golden/tagging.json", scenes);
  CHECK(d.task == Task::Tagging);
  CHECK(d.records.size() == 3);
  CHECK(d.records[0].objects.size() == 3);
  CHECK(input_names(Task::PairQa) == std::vector<std::string>{"LEFT", "RIGHT"});
  CHECK(code_of([&] { (void)dataset_from_json({{"task", "nope"}, {"records", nlohmann::json::array()}}, ".", scenes); }) ==
        ErrorCode::InvalidDocument);
  CHECK(code_of([&] { (void)dataset_from_json({{"task", "qa"}, {"records", {{{"id", "x"}}}}}, ".", scenes); }) ==
        ErrorCode::InvalidDocument);
}

TEST_CASE("tagging predictions come from the last TAG step") {
  const Registry reg = standard_registry();
  ObjectRegion a = pred({0, 0, 4, 4}, "A");
  ObjectRegion b = pred({4, 4, 8, 8}, std::nullopt);
  b.category = "thing";
  const Image img = Image::filled(10, 10, Rgba{1, 2, 3, 255});
  const auto run = execute(dsl::parse_program("X=TAG(image=IMAGE,object=OBJ)"),
                           {{"IMAGE", Value::image(img)}, {"OBJ", Value::objects({a, b})}}, reg, nullptr);
  const auto p = tagging_predictions(run);
  REQUIRE(p);
  REQUIRE(p->size() == 1);
  CHECK(p->front().tag == "A");
  const auto none = execute(dsl::parse_program("X=EVAL(expr='1')"), {}, reg, nullptr);
  CHECK_FALSE(tagging_predictions(none));
}

TEST_CASE("run_eval on the pair set writes a report and one rationale per record") {
  const auto out = testkit::temp_dir("eval-pair");
  auto gb = testkit::make_golden_backend();
  const auto ds = load_dataset(testkit::data_dir() + "/golden/pairqa.json",
                               [&](const backend::Scene& s) { return gb.procedural->add_scene(s); });
  auto client = gen::ReplayClient::load(testkit::data_dir() + "/golden/completions.json");
  EvalConfig cfg;
  cfg.prompt = testkit::golden_prompt("pairqa", gen::Strategy::Random, 3, 1);
  cfg.seed = 1;
  cfg.out_dir = out;
  const auto report = run_eval(ds, cfg, client, *gb.chain, standard_registry());
  CHECK(report.at("aggregate").at("accuracy") == 1.0);
  CHECK(report.at("aggregate").at("total") == 4);
  std::size_t html = 0;
  for (const auto& e : fs::directory_iterator(fs::path(out) / "rationales")) html += e.path().extension() == ".html";
  CHECK(html == 4);
  CHECK(testkit::load_json(out + "/report.json") == report);
  fs::remove_all(out);
}

TEST_CASE("failed records count as wrong") {
  auto gb = testkit::make_golden_backend();
  const auto ds = dataset_from_json(nlohmann::json::parse(R"({"task": "qa", "records": [
      {"id": "ok", "instruction": "How many red circles are there?", "answer": "1",
       "images": [{"scene": {"shapes": [{"shape": "circle", "color": "red", "box": [2, 2, 20, 20]}]}}]},
      {"id": "broken", "instruction": "Divide", "answer": "1",
       "images": [{"scene": {"shapes": []}}]}]})"),
                                    ".", [&](const backend::Scene& s) { return gb.procedural->add_scene(s); });
  gen::ReplayClient client;
  client.add_instruction("How many red circles are there?", "B=LOC(image=IMAGE,object='red circle')\nA=COUNT(box=B)");
  client.add_instruction("Divide", "A=EVAL(expr='1 / 0')");
  EvalConfig cfg;
  cfg.prompt = testkit::golden_prompt("qa", gen::Strategy::Random, 2, 1);
  const auto report = run_eval(ds, cfg, client, *gb.chain, standard_registry());
  CHECK(report.at("records")[0].at("status") == "ok");
  CHECK(report.at("records")[1].at("status") == "failed");
  CHECK(report.at("records")[1].at("correct") == false);
  CHECK(report.at("aggregate").at("failed") == 1);
  CHECK(report.at("aggregate").at("accuracy") == 0.5);
}

TEST_CASE("editing rows leave the judgment blank") {
  const auto r = testkit::run_golden_suite();
  const auto& editing = r.reports.at("editing");
  for (const auto& row : editing.at("records")) CHECK(row.at("judgment").is_null());
  CHECK(editing.at("aggregate").at("judged") == 0);
  CHECK(r.all_pass());
}
