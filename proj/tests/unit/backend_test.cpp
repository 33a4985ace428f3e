#include <doctest.h>

#include "helpers.hpp"
#include "vistep/http_backend.hpp"
#include "vistep/neural.hpp"

using namespace vistep;
using namespace vistep::backend;

namespace {

const char* kScene = R"({
  "width": 64, "height": 48,
  "shapes": [
    {"shape": "circle", "color": "blue", "box": [10, 10, 30, 30]},
    {"shape": "square", "color": "red", "box": [36, 8, 52, 24]},
    {"shape": "triangle", "color": "green", "box": [36, 28, 56, 44], "label": "Zed"},
    {"shape": "circle", "color": "yellow", "box": [2, 34, 14, 46], "kind": "face", "label": "Amy"}
  ]})";

Request locate(const std::string& ref, const std::string& query) {
  Request r;
  r.op = Op::Locate;
  r.image_ref = ref;
  r.query = query;
  return r;
}

Request vqa(const std::string& ref, const std::string& question) {
  Request r;
  r.op = Op::Vqa;
  r.image_ref = ref;
  r.question = question;
  return r;
}

}  // namespace

TEST_CASE("request json round trip and canonical key") {
  Request r;
  r.op = Op::ScoreRegions;
  r.image_ref = "abc";
  r.boxes = {{1, 2, 3, 4}};
  r.texts = {"dog"};
  const auto back = Request::from_json(r.to_json());
  CHECK(back.key() == r.key());
  CHECK(r.key().find(' ') == std::string::npos);
  CHECK(r.key().find("\"op\":\"score_regions\"") != std::string::npos);
  Request missing;
  missing.op = Op::Vqa;
  missing.image_ref = "abc";
  CHECK(code_of([&] { missing.check(); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("response validation") {
  Request req;
  req.op = Op::ScoreRegions;
  req.boxes = {{0, 0, 1, 1}, {1, 1, 2, 2}};
  req.texts = {"a"};
  Response good;
  good.scores = {{0.5}, {1.0}};
  good.check_against(req);
  Response short_rows;
  short_rows.scores = {{0.5}};
  CHECK(code_of([&] { short_rows.check_against(req); }) == ErrorCode::BackendError);
  Response out_of_range;
  out_of_range.scores = {{0.5}, {1.5}};
  CHECK(code_of([&] { out_of_range.check_against(req); }) == ErrorCode::BackendError);
  CHECK(Response::from_json(good.to_json()) == good);
}

TEST_CASE("fixtures match by key and by wildcard image") {
  FixtureSet set = FixtureSet::from_json(nlohmann::json::parse(R"({"fixtures": [
    {"request": {"op": "vqa", "image_ref": "img1", "question": "how many dogs?"}, "response": {"answer": "2"}},
    {"request": {"op": "vqa", "image_ref": "*", "question": "is it day?"}, "response": {"answer": "yes"}}
  ]})"));
  FixtureBackend fb(set);
  CHECK(fb.call(vqa("img1", "how many dogs?")).answer == "2");
  CHECK(fb.call(vqa("anything", "is it day?")).answer == "yes");
  CHECK(fb.call(vqa("img1", "how many dogs?")).to_json().dump() == fb.call(vqa("img1", "how many dogs?")).to_json().dump());
  try {
    (void)fb.call(vqa("img2", "how many dogs?"));
    FAIL("answered an unknown request");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FixtureMiss);
    CHECK(e.detail().at("key") == vqa("img2", "how many dogs?").key());
  }
  CHECK(FixtureSet::from_json(set.to_json()).size() == 2);
}

TEST_CASE("procedural locate finds the named shape") {
  ProceduralBackend pb;
  const Image img = pb.add_scene(scene_of(kScene));
  const auto r = pb.call(locate(img.id(), "blue circle"));
  REQUIRE(r.regions.size() == 1);
  CHECK(r.regions[0].box == Box{10, 10, 30, 30});
  CHECK(r.regions[0].score == 1.0);
  CHECK(pb.call(locate(img.id(), "circles")).regions.size() == 2);
  CHECK(pb.call(locate(img.id(), "Zed")).regions.size() == 1);
  CHECK(pb.call(locate(img.id(), "purple hexagon")).regions.empty());
}

TEST_CASE("procedural backend is deterministic") {
  ProceduralBackend a;
  ProceduralBackend b;
  const Image img = a.add_scene(scene_of(kScene));
  b.add_scene(scene_of(kScene));
  for (const auto& q : {"blue circle", "square", "thing", "red"}) {
    CHECK(a.call(locate(img.id(), q)).to_json() == b.call(locate(img.id(), q)).to_json());
  }
  Request seg;
  seg.op = Op::Segment;
  seg.image_ref = img.id();
  CHECK(a.call(seg).to_json() == a.call(seg).to_json());
  CHECK(a.call(seg).regions.size() == 4);
}

TEST_CASE("procedural faces and questions") {
  ProceduralBackend pb;
  const Image img = pb.add_scene(scene_of(kScene));
  Request faces;
  faces.op = Op::DetectFaces;
  faces.image_ref = img.id();
  const auto f = pb.call(faces);
  REQUIRE(f.regions.size() == 1);
  CHECK(f.regions[0].category == "face");
  CHECK(pb.call(vqa(img.id(), "How many circles are there?")).answer == "2");
  CHECK(pb.call(vqa(img.id(), "Is there a red square?")).answer == "yes");
  CHECK(pb.call(vqa(img.id(), "Are there purple circles?")).answer == "no");
  CHECK(pb.call(vqa(img.id(), "What color is the triangle?")).answer == "green");
  CHECK(pb.call(vqa(img.id(), "What shape is the red object?")).answer == "square");
  CHECK(code_of([&] { (void)pb.call(vqa(img.id(), "Why is the sky blue?")); }) == ErrorCode::FixtureMiss);
}

TEST_CASE("unregistered images are analysed from pixels") {
  ProceduralBackend pb;
  const Image img = render_scene(scene_of(kScene));
  pb.put_image(img);
  const auto r = pb.call(locate(img.id(), "red square"));
  REQUIRE(r.regions.size() == 1);
  CHECK(r.regions[0].box == Box{36, 8, 52, 24});
  const auto objs = analyze_pixels(img);
  CHECK(objs.size() == 4);
}

TEST_CASE("procedural inpaint fills with the named colour") {
  ProceduralBackend pb;
  const Image img = pb.add_scene(scene_of(kScene));
  ObjectRegion r;
  r.box = {36, 8, 52, 24};
  r.mask = shape_mask(scene_of(kScene).shapes[1], 64, 48);
  const Image out = neural::replace(img, {r}, "a green square", pb);
  CHECK(out.at(40, 10) == *scene_color("green"));
  CHECK(out.at(0, 0) == img.at(0, 0));
}

TEST_CASE("chain falls through on misses") {
  auto fixtures = std::make_shared<FixtureBackend>(FixtureSet::from_json(nlohmann::json::parse(
      R"([{"request": {"op": "vqa", "image_ref": "*", "question": "Why?"}, "response": {"answer": "because"}}])")));
  auto proc = std::make_shared<ProceduralBackend>();
  ChainBackend chain({fixtures, proc});
  const Image img = proc->add_scene(scene_of(kScene));
  chain.put_image(img);
  CHECK(chain.call(vqa(img.id(), "Why?")).answer == "because");
  CHECK(chain.call(vqa(img.id(), "How many squares are there?")).answer == "1");
  CHECK(code_of([&] { (void)chain.call(vqa(img.id(), "Who?")); }) == ErrorCode::FixtureMiss);
}

TEST_CASE("content words drop stop words and fold plurals") {
  CHECK(content_words("the blue circles") == std::vector<std::string>{"blue", "circle"});
  CHECK(content_words("a boxes of the") == std::vector<std::string>{"box"});
}

TEST_CASE("http backend round trip") {
  auto proc = std::make_shared<ProceduralBackend>();
  const Image img = proc->add_scene(scene_of(kScene));
  BackendServer server(proc);
  const int port = server.start();
  HttpBackend client("http://127.0.0.1:" + std::to_string(port));
  CHECK(client.put_image(img) == img.id());
  CHECK(client.get_image(img.id()) == img);
  const auto local = proc->call(locate(img.id(), "blue circle"));
  const auto remote = client.call(locate(img.id(), "blue circle"));
  CHECK(remote == local);
  CHECK(code_of([&] { (void)client.call(vqa(img.id(), "Who?")); }) == ErrorCode::FixtureMiss);
  CHECK(code_of([&] { (void)client.get_image("0000"); }) == ErrorCode::NotFound);
  server.stop();
}
