#include <doctest.h>

#include <filesystem>
#include <thread>

#include <httplib.h>

#include "helpers.hpp"
#include "testkit.hpp"
#include "vistep/codec.hpp"
#include "vistep/service.hpp"

using namespace vistep;
namespace fs = std::filesystem;

namespace {

const char* kCircles = R"({
  "width": 64, "height": 40,
  "shapes": [{"shape": "circle", "color": "red", "box": [4, 4, 20, 20]},
             {"shape": "circle", "color": "red", "box": [30, 10, 44, 24]},
             {"shape": "square", "color": "blue", "box": [46, 20, 60, 34]}]})";

struct Harness {
  std::string root = testkit::temp_dir("service");
  std::unique_ptr<service::Service> svc;
  std::unique_ptr<httplib::Client> http;

  Harness() {
    service::ServiceConfig cfg;
    cfg.store_path = root + "/store.db";
    cfg.image_dir = root + "/images";
    cfg.tasks["qa"] = testkit::golden_prompt("qa", gen::Strategy::Random, 2, 1);
    cfg.tasks["editing"] = testkit::golden_prompt("editing", gen::Strategy::Random, 2, 1);
    auto client = std::make_shared<gen::ReplayClient>(
        gen::ReplayClient::load(testkit::data_dir() + "/golden/completions.json"));
    client->add_instruction("Say nonsense", "garbage(");
    client->add_instruction("Divide by zero", "A=EVAL(expr='1 / 0')\nB=RESULT(var=A)");
    cfg.client = client;
    cfg.backend = std::make_shared<backend::ProceduralBackend>();
    svc = std::make_unique<service::Service>(cfg);
    http = std::make_unique<httplib::Client>("127.0.0.1", svc->start());
  }
  ~Harness() {
    svc->stop();
    fs::remove_all(root);
  }

  httplib::Result post(const std::string& path, const nlohmann::json& body) {
    return http->Post(path, body.dump(), "application/json");
  }

  std::string upload(const char* scene) {
    const auto png = codec::encode_png(backend::render_scene(scene_of(scene)));
    auto r = http->Post("/api/images", std::string(png.begin(), png.end()), "image/png");
    REQUIRE(r);
    REQUIRE(r->status == 200);
    return nlohmann::json::parse(r->body).at("image_id");
  }

  std::string code(const httplib::Result& r) { return nlohmann::json::parse(r->body).at("error").at("code"); }
};

const char* kCount = "BOX0=LOC(image=IMAGE,object='red circle')\nANSWER0=COUNT(box=BOX0)\nFINAL=RESULT(var=ANSWER0)";

}  // namespace

TEST_CASE("image upload and download") {
  Harness h;
  const auto img = backend::render_scene(scene_of(kCircles));
  const auto id = h.upload(kCircles);
  CHECK(id == img.id());
  CHECK(h.upload(kCircles) == id);
  auto got = h.http->Get("/api/images/" + id);
  REQUIRE(got);
  CHECK(got->status == 200);
  CHECK(got->get_header_value("Content-Type") == "image/png");
  const std::vector<std::uint8_t> bytes(got->body.begin(), got->body.end());
  CHECK(codec::decode_image(bytes) == img);
  auto text = h.http->Post("/api/images", "hello", "text/plain");
  CHECK(text->status == 415);
  CHECK(h.http->Get("/api/images/deadbeef")->status == 404);
}

TEST_CASE("generate") {
  Harness h;
  auto ok = h.post("/api/generate", {{"instruction", "How many red circles are there?"}, {"task", "qa"}});
  REQUIRE(ok->status == 200);
  const auto body = nlohmann::json::parse(ok->body);
  CHECK(body.at("program").get<std::string>().find("COUNT(") != std::string::npos);
  CHECK(body.at("prompt").get<std::string>().find("Instruction: How many red circles are there?") != std::string::npos);

  auto bad_task = h.post("/api/generate", {{"instruction", "x"}, {"task", "foo"}});
  CHECK(bad_task->status == 400);
  auto bad_strategy = h.post("/api/generate", {{"instruction", "x"}, {"task", "qa"}, {"strategy", "magic"}});
  CHECK(bad_strategy->status == 400);
  auto too_many = h.post("/api/generate", {{"instruction", "x"}, {"task", "qa"}, {"k", 400}});
  CHECK(too_many->status == 400);
  auto garbage = h.post("/api/generate", {{"instruction", "Say nonsense"}, {"task", "qa"}});
  CHECK(garbage->status == 422);
  CHECK(nlohmann::json::parse(garbage->body).at("error").at("detail").at("raw") == "garbage(");
  auto missing = h.post("/api/generate", {{"task", "qa"}});
  CHECK(missing->status == 400);
  auto not_json = h.http->Post("/api/generate", "{oops", "application/json");
  CHECK(not_json->status == 400);
  auto unknown = h.post("/api/generate", {{"instruction", "Unrecorded"}, {"task", "qa"}});
  CHECK(unknown->status == 502);
}

TEST_CASE("execute and fetch runs") {
  Harness h;
  const auto id = h.upload(kCircles);
  auto ok = h.post("/api/execute", {{"program", kCount}, {"task", "qa"}, {"input_image_ids", {id}}});
  REQUIRE(ok->status == 200);
  const auto summary = nlohmann::json::parse(ok->body);
  CHECK(summary.at("status") == "ok");
  CHECK(summary.at("result_summary") == "2");
  const std::string run_id = summary.at("run_id");

  auto run = h.http->Get("/api/runs/" + run_id);
  REQUIRE(run->status == 200);
  CHECK(nlohmann::json::parse(run->body).at("traces").size() == 3);
  CHECK(h.http->Get("/api/runs/" + run_id)->body == run->body);

  auto html = h.http->Get("/api/runs/" + run_id + "/rationale");
  REQUIRE(html->status == 200);
  CHECK(html->get_header_value("Content-Type").find("text/html") == 0);
  std::size_t cells = 0;
  for (auto at = html->body.find("<section class=\"cell\""); at != std::string::npos;
       at = html->body.find("<section class=\"cell\"", at + 1)) {
    ++cells;
  }
  CHECK(cells == 3);
  auto sidecar = h.http->Get("/api/runs/" + run_id + "/rationale?format=json");
  CHECK(nlohmann::json::parse(sidecar->body).at("cells").size() == 3);

  CHECK(h.http->Get("/api/runs/nope")->status == 404);
  CHECK(h.http->Get("/api/runs/nope/rationale")->status == 404);
}

TEST_CASE("execute failures") {
  Harness h;
  const auto id = h.upload(kCircles);
  auto undefined = h.post("/api/execute", {{"program", "A=COUNT(box=NOPE)"}, {"task", "qa"}, {"input_image_ids", {id}}});
  CHECK(undefined->status == 422);
  CHECK(nlohmann::json::parse(undefined->body).at("validation").at("issues").size() == 1);
  auto missing_image =
      h.post("/api/execute", {{"program", kCount}, {"task", "qa"}, {"input_image_ids", {"0123abcd"}}});
  CHECK(missing_image->status == 404);
  auto syntax = h.post("/api/execute", {{"program", "A=("}, {"task", "qa"}, {"input_image_ids", {id}}});
  CHECK(syntax->status == 422);
  auto wrong_count = h.post("/api/execute", {{"program", kCount}, {"task", "qa"}, {"input_image_ids", {id, id}}});
  CHECK(wrong_count->status == 400);

  auto failed = h.post("/api/execute", {{"program", "A=EVAL(expr='1 / 0')"}, {"task", "qa"}, {"input_image_ids", {id}}});
  REQUIRE(failed->status == 200);
  const auto summary = nlohmann::json::parse(failed->body);
  CHECK(summary.at("status") == "failed");
  CHECK(summary.at("failed_step") == 1);
  auto html = h.http->Get("/api/runs/" + summary.at("run_id").get<std::string>() + "/rationale");
  CHECK(html->body.find("class=\"error-banner\"") != std::string::npos);
}

TEST_CASE("sessions keep their history in order") {
  Harness h;
  const auto id = h.upload(kCircles);
  auto created = h.post("/api/sessions", {{"task", "qa"}, {"image_ids", {id}}});
  REQUIRE(created->status == 200);
  const std::string sid = nlohmann::json::parse(created->body).at("session_id");

  auto first = h.post("/api/sessions/" + sid + "/iterations", {{"instruction", "How many red circles are there?"}});
  REQUIRE(first->status == 200);
  CHECK(nlohmann::json::parse(first->body).at("result_summary") == "2");
  auto second = h.post("/api/sessions/" + sid + "/iterations", {{"instruction", "Say nonsense"}});
  REQUIRE(second->status == 200);
  CHECK(nlohmann::json::parse(second->body).at("status") == "failed");
  CHECK(nlohmann::json::parse(second->body).at("error").at("code") == "GenerationError");

  const auto session = nlohmann::json::parse(h.http->Get("/api/sessions/" + sid)->body);
  REQUIRE(session.at("history").size() == 2);
  CHECK(session.at("history")[0].at("index") == 0);
  CHECK(session.at("history")[1].at("instruction") == "Say nonsense");
  const auto list = nlohmann::json::parse(h.http->Get("/api/sessions")->body);
  CHECK(list.at("sessions") == nlohmann::json::array({sid}));

  CHECK(h.http->Get("/api/sessions/nope")->status == 404);
  CHECK(h.post("/api/sessions/nope/iterations", {{"instruction", "x"}})->status == 404);
  CHECK(h.post("/api/sessions", {{"task", "qa"}, {"image_ids", {"0123abcd"}}})->status == 404);
  CHECK(h.post("/api/sessions", {{"task", "foo"}})->status == 400);
}

TEST_CASE("concurrent iterations on one session are serialised") {
  Harness h;
  const auto id = h.upload(kCircles);
  const std::string sid =
      nlohmann::json::parse(h.post("/api/sessions", {{"task", "qa"}, {"image_ids", {id}}})->body).at("session_id");
  const int port = h.http->port();
  std::vector<std::thread> workers;
  for (int i = 0; i < 4; ++i) {
    workers.emplace_back([&, port] {
      httplib::Client c("127.0.0.1", port);
      c.Post("/api/sessions/" + sid + "/iterations",
             nlohmann::json{{"instruction", "How many red circles are there?"}}.dump(), "application/json");
    });
  }
  for (auto& w : workers) w.join();
  const auto session = nlohmann::json::parse(h.http->Get("/api/sessions/" + sid)->body);
  REQUIRE(session.at("history").size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(session.at("history")[i].at("index") == i);
}

TEST_CASE("store persists values verbatim") {
  const auto dir = testkit::temp_dir("kv");
  {
    service::KvStore kv(dir + "/kv.db");
    kv.put("runs", "a", "{\"x\": 1}");
    kv.put("runs", "b", "2");
    kv.put("runs", "a", "3");
  }
  service::KvStore kv(dir + "/kv.db");
  CHECK(kv.get("runs", "a") == "3");
  CHECK_FALSE(kv.get("runs", "c"));
  CHECK(kv.keys("runs").size() == 2);
  CHECK(kv.keys("other").empty());
  fs::remove_all(dir);
}
