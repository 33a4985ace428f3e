#include <doctest.h>

#include "helpers.hpp"
#include "vistep/interpreter.hpp"
#include "vistep/modules.hpp"
#include "vistep/serialize.hpp"

using namespace vistep;

namespace {

const char* kTruckScene = R"({
  "width": 96, "height": 64,
  "shapes": [
    {"shape": "rectangle", "color": "blue", "box": [6, 30, 34, 50], "category": "truck"},
    {"shape": "triangle", "color": "red", "box": [56, 16, 80, 50], "category": "person"}
  ]})";

const char* kGqa =
    "BOX0=LOC(image=IMAGE,object='person')\n"
    "IMAGE0=CROP_LEFTOF(image=IMAGE,box=BOX0)\n"
    "BOX1=LOC(image=IMAGE0,object='blue rectangle')\n"
    "ANSWER0=COUNT(box=BOX1)\n"
    "ANSWER1=EVAL(expr=\"'left' if {ANSWER0} > 0 else 'right'\")\n"
    "FINAL_RESULT=RESULT(var=ANSWER1)\n";

}  // namespace

TEST_CASE("qa program on a procedural scene") {
  const Registry reg = standard_registry();
  backend::ProceduralBackend pb;
  const Image img = pb.add_scene(scene_of(kTruckScene));
  const auto run = execute(dsl::parse_program(kGqa), {{"IMAGE", Value::image(img)}}, reg, &pb);
  REQUIRE(run.ok());
  REQUIRE(run.result);
  CHECK(*run.result == Value::text("left"));
  CHECK(run.traces.size() == 6);
  CHECK(run.traces[3].output == Value::number(1));
  CHECK(run.traces[1].output->as_image().width() == 56);
}

TEST_CASE("pair program with fixture answers") {
  const Registry reg = standard_registry();
  const Image left = Image::filled(4, 4, Rgba{1, 0, 0, 255});
  const Image right = Image::filled(4, 4, Rgba{0, 1, 0, 255});
  backend::FixtureSet set;
  backend::Request q;
  q.op = backend::Op::Vqa;
  q.question = "Is there a dog?";
  q.image_ref = left.id();
  backend::Response yes;
  yes.answer = "True";
  set.add(q, yes);
  q.image_ref = right.id();
  backend::Response no;
  no.answer = "False";
  set.add(q, no);
  backend::FixtureBackend fb(set);
  const auto run = execute(dsl::parse_program("ANSWER0=VQA(image=LEFT,question='Is there a dog?')\n"
                                              "ANSWER1=VQA(image=RIGHT,question='Is there a dog?')\n"
                                              "ANSWER2=EVAL(expr='{ANSWER0} and {ANSWER1}')\n"
                                              "FINAL_ANSWER=RESULT(var=ANSWER2)\n"),
                           {{"LEFT", Value::image(left)}, {"RIGHT", Value::image(right)}}, reg, &fb);
  REQUIRE(run.ok());
  CHECK(*run.result == Value::boolean(false));
}

TEST_CASE("failure stops the run at the failing step") {
  const Registry reg = standard_registry();
  const auto run = execute(dsl::parse_program("ANSWER0=EVAL(expr='1 + 1')\n"
                                              "ANSWER1=COUNT(box=NOPE)\n"
                                              "ANSWER2=EVAL(expr='2')\n"),
                           {}, reg, nullptr);
  CHECK_FALSE(run.ok());
  REQUIRE(run.traces.size() == 2);
  CHECK_FALSE(run.traces[0].error);
  REQUIRE(run.failed_step());
  CHECK(run.failed_step()->step == 2);
  CHECK(run.failed_step()->error->at("code") == "UnboundVariable");
  CHECK_FALSE(run.result);
}

TEST_CASE("the last step is the result when no RESULT step runs") {
  const Registry reg = standard_registry();
  const auto run = execute(dsl::parse_program("A=EVAL(expr='2 * 3')"), {}, reg, nullptr);
  REQUIRE(run.result);
  CHECK(*run.result == Value::number(6));
}

TEST_CASE("module failures are recorded, not thrown") {
  const Registry reg = standard_registry();
  const Image img = Image::filled(10, 10, Rgba{5, 5, 5, 255});
  const auto run = execute(dsl::parse_program("A=CROP_LEFTOF(image=IMAGE,box=B)"), {{"IMAGE", Value::image(img)}, {"B", Value::box({0, 0, 5, 5})}},
                           reg, nullptr);
  CHECK_FALSE(run.ok());
  CHECK(run.failed_step()->error->at("code") == "EmptyCrop");
  const auto missing = execute(dsl::parse_program("A=LOC(image=IMAGE,object='x')"), {{"IMAGE", Value::image(img)}}, reg, nullptr);
  CHECK_FALSE(missing.ok());
}

TEST_CASE("resolve_args") {
  const Registry reg = standard_registry();
  ProgramState s;
  s.bind("IMAGE", Value::image(Image::filled(2, 2, {})));
  s.bind("OBJ", Value::objects({}));
  s.bind("N", Value::number(3));
  const auto& sig = reg.resolve("SELECT").signature;
  const auto args = resolve_args(dsl::parse_step("O=SELECT(image=IMAGE,object=OBJ,query='desert',category=None)"), s, sig, 1);
  CHECK(args.get("query") == Value::text("desert"));
  CHECK(args.get("category").is_null());
  CHECK(code_of([&] { (void)resolve_args(dsl::parse_step("O=SELECT(image=N,object=OBJ,query='d')"), s, sig, 1); }) ==
        ErrorCode::TypeMismatch);
  CHECK(code_of([&] { (void)resolve_args(dsl::parse_step("O=SELECT(image=IMAGE,query='d')"), s, sig, 1); }) ==
        ErrorCode::MissingArgument);
  CHECK(code_of([&] { (void)resolve_args(dsl::parse_step("O=SELECT(image=IMAGE,object=OBJ,query='d',x=1)"), s, sig, 1); }) ==
        ErrorCode::UnknownArgument);
  const auto with_default = resolve_args(dsl::parse_step("O=SELECT(image=IMAGE,object=OBJ,query='d')"), s, sig, 1);
  CHECK(with_default.get("category").is_null());
}

TEST_CASE("registry lookups") {
  Registry reg = standard_registry();
  CHECK(&reg.resolve("Count") == &reg.resolve("COUNT"));
  CHECK(code_of([&] { (void)reg.resolve("NOPE"); }) == ErrorCode::UnknownModule);
  CHECK(code_of([&] { reg.add(ModuleImpl{reg.resolve("COUNT").signature, {}, {}}); }) == ErrorCode::DuplicateModule);
  CHECK(reg.size() == 22);
}

TEST_CASE("count and result") {
  const Registry reg = standard_registry();
  ObjectList three(3);
  const auto run = execute(dsl::parse_program("A=COUNT(box=OBJ)\nB=COUNT(box=NONE_FOUND)\nC=RESULT(var=A)"),
                           {{"OBJ", Value::objects(three)}, {"NONE_FOUND", Value::objects({})}}, reg, nullptr);
  REQUIRE(run.ok());
  CHECK(run.traces[0].output->summary() == "3");
  CHECK(run.traces[1].output == Value::number(0));
  CHECK(*run.result == Value::number(3));
}

TEST_CASE("run records round trip and derive stable ids") {
  const Registry reg = standard_registry();
  backend::ProceduralBackend pb;
  const Image img = pb.add_scene(scene_of(kTruckScene));
  const auto program = dsl::parse_program(kGqa);
  const std::map<std::string, Value> inputs{{"IMAGE", Value::image(img)}};
  const auto a = execute(program, inputs, reg, &pb);
  const auto b = execute(program, inputs, reg, &pb);
  CHECK(a.run_id == b.run_id);
  CHECK(a.run_id == derive_run_id(program.source, inputs));
  MemoryImageStore store;
  const auto j = a.to_json(&store);
  CHECK(j == b.to_json(&store));
  const auto back = RunRecord::from_json(j, store);
  CHECK(back.to_json(&store) == j);
  CHECK(*back.result == *a.result);
  CHECK(a.to_json(&store, true).at("traces")[0].contains("wall_ms"));
}
