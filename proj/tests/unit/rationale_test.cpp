#include <doctest.h>

#include <regex>
#include <set>

#include "helpers.hpp"
#include "vistep/interpreter.hpp"
#include "vistep/modules.hpp"
#include "vistep/rationale.hpp"

using namespace vistep;

namespace {

std::size_t occurrences(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto at = text.find(needle); at != std::string::npos; at = text.find(needle, at + 1)) ++n;
  return n;
}

// Every non-void element closes in order.
bool balanced(const std::string& html) {
  static const std::set<std::string> kVoid{"meta", "img", "br", "hr", "link", "input", "!DOCTYPE"};
  std::vector<std::string> stack;
  const std::regex tag(R"(<(/?)([!A-Za-z][A-Za-z0-9]*)[^>]*>)");
  const std::string body = std::regex_replace(html, std::regex(R"(<style>[\s\S]*?</style>)"), "");
  for (std::sregex_iterator it(body.begin(), body.end(), tag), end; it != end; ++it) {
    const std::string name = (*it)[2];
    if (kVoid.contains(name)) continue;
    if ((*it)[1] == "/") {
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
    } else {
      stack.push_back(name);
    }
  }
  return stack.empty();
}

RunRecord run(const std::string& src, const std::map<std::string, Value>& inputs, backend::Backend* be = nullptr) {
  static const Registry reg = standard_registry();
  return execute(dsl::parse_program(src), inputs, reg, be);
}

}  // namespace

TEST_CASE("one cell per step and a result banner") {
  const auto r = run("A=EVAL(expr='1 + 2')\nB=EVAL(expr='{A} * 2')\nC=RESULT(var=B)", {});
  const auto html = rationale::render_html(r);
  CHECK(occurrences(html, "<section class=\"cell\"") == 3);
  CHECK(occurrences(html, "class=\"result-banner\"") == 1);
  CHECK(occurrences(html, "class=\"error-banner\"") == 0);
  CHECK(balanced(html));
  CHECK(rationale::render_sidecar(r).at("cells").size() == 3);
}

TEST_CASE("failed run shows cells up to the failure") {
  const auto r = run("A=EVAL(expr='1')\nB=EVAL(expr='1 / 0')\nC=EVAL(expr='2')\nD=RESULT(var=C)", {});
  const auto html = rationale::render_html(r);
  CHECK(occurrences(html, "<section class=\"cell\"") == 2);
  const auto banner = html.find("class=\"error-banner\"");
  REQUIRE(banner != std::string::npos);
  CHECK(banner > html.find("id=\"step-2\""));
  CHECK(html.find("DivisionByZero") != std::string::npos);
  CHECK(html.find("class=\"failure-banner\"") != std::string::npos);
  CHECK(balanced(html));
}

TEST_CASE("editing run ends with an image thumbnail") {
  backend::ProceduralBackend pb;
  const Image img = pb.add_scene(scene_of(R"({"shapes": [{"shape": "circle", "color": "red", "box": [4, 4, 30, 30]}]})"));
  const auto r = run("OBJ0=SEG(image=IMAGE)\nIMAGE0=COLORPOP(image=IMAGE,object=OBJ0)\nFINAL=RESULT(var=IMAGE0)",
                     {{"IMAGE", Value::image(img)}}, &pb);
  REQUIRE(r.ok());
  const auto html = rationale::render_html(r);
  const auto last = html.rfind("<section class=\"cell\"");
  CHECK(html.find("data:image/png;base64,", last) != std::string::npos);
  CHECK(html.find("<script") == std::string::npos);
  CHECK(html.find("http://") == std::string::npos);
}

TEST_CASE("rendering is deterministic and escapes text") {
  const auto r = run("A=EVAL(expr=\"'<b>' + '&'\")", {});
  CHECK(rationale::render_html(r) == rationale::render_html(r));
  CHECK(rationale::render_html(r).find("&lt;b&gt;&amp;") != std::string::npos);
  CHECK(rationale::escape_html("\"'") == "&quot;&#39;");
}

TEST_CASE("captions come from the registry") {
  const Registry reg = standard_registry();
  const auto r = run("A=COUNT(box=OBJ)", {{"OBJ", Value::objects(ObjectList(2))}});
  rationale::Options opts;
  opts.registry = &reg;
  CHECK(rationale::render_html(r, opts).find("class=\"caption\"") != std::string::npos);
  CHECK(rationale::render_html(r).find("class=\"caption\"") == std::string::npos);
}

TEST_CASE("the balance checker notices broken markup") {
  CHECK(balanced("<div><p>x</p></div>"));
  CHECK_FALSE(balanced("<div><p>x</div></p>"));
  CHECK_FALSE(balanced("<div>"));
}
