// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <httplib.h>

#include "testkit.hpp"
#include "vistep/codec.hpp"
#include "vistep/error.hpp"
#include "vistep/eval.hpp"
#include "vistep/image_ops.hpp"
#include "vistep/service.hpp"

namespace fs = std::filesystem;
using namespace vistep;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_s;
  std::function<Verdict()> run;
};

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : "; ") + s;
  return out;
}

Verdict metric_reproduction() {
  struct Row {
    double p, r, want;
  };
  const Row rows[] = {{69.0, 59.1, 63.7}, {77.6, 73.9, 75.7}, {87.2, 74.9, 80.6}};
  std::string detail;
  bool ok = true;
  for (const auto& row : rows) {
    // One record per row carrying the row's averages reproduces the aggregate.
    const auto f = eval::aggregate_f1({{row.p / 100.0, row.r / 100.0}});
    const double got = 100.0 * f.f1;
    ok = ok && std::abs(got - row.want) <= 0.05;
    char buf[96];
    std::snprintf(buf, sizeof buf, "(%.1f,%.1f)->%.2f ", row.p, row.r, got);
    detail += buf;
  }
  return {ok, detail};
}

Verdict parser_fuzz() {
  const auto r = testkit::run_parser_fuzz(10000, 10000, 20240611);
  const bool ok = r.steps == 10000 && r.round_trip_failures == 0 && r.malformed == 10000 && r.bad_errors == 0 &&
                  r.rejected > 0;
  return {ok, std::to_string(r.steps - r.round_trip_failures) + "/" + std::to_string(r.steps) + " round trips, " +
                  std::to_string(r.rejected) + " positioned rejections, " + std::to_string(r.accepted) +
                  " still valid, " + std::to_string(r.bad_errors) + " bad errors " + join(r.samples)};
}

Verdict expression_oracle() {
  const auto r = testkit::run_expression_oracle();
  return {r.cases >= 100000 && r.mismatches == 0,
          std::to_string(r.cases) + " cases, " + std::to_string(r.mismatches) + " disagreements " + join(r.samples)};
}

Verdict classify_select() {
  const auto r = testkit::run_classify_suite(1000, 99);
  const bool ok = r.random_cases == 1000 && r.select_cases == 1000 && r.duplicate_tags == 0 &&
                  r.single_category_errors == 0 && r.oracle_mismatches == 0 && r.select_length_errors == 0;
  return {ok, std::to_string(r.random_cases) + " random, " + std::to_string(r.exhaustive_cases) + " exhaustive, " +
                  std::to_string(r.select_cases) + " select; duplicates " + std::to_string(r.duplicate_tags) +
                  ", argmax errors " + std::to_string(r.single_category_errors) + ", oracle mismatches " +
                  std::to_string(r.oracle_mismatches) + ", select errors " + std::to_string(r.select_length_errors) +
                  " " + join(r.samples)};
}

Verdict golden_suite() {
  const auto r = testkit::run_golden_suite();
  std::set<std::string> datasets;
  std::size_t passed = 0;
  std::vector<std::string> failures;
  for (const auto& c : r.cases) {
    datasets.insert(c.dataset);
    if (c.pass) {
      ++passed;
    } else {
      failures.push_back(c.id + ": " + c.detail);
    }
  }
  const bool ok = r.all_pass() && r.scenes >= 12 && datasets.size() == 4;
  char f1[64];
  std::snprintf(f1, sizeof f1, "tagging F1 %.3f, localization F1 %.3f", r.tagging_f1, r.localization_f1);
  return {ok, std::to_string(passed) + "/" + std::to_string(r.cases.size()) + " records over " +
                  std::to_string(r.scenes) + " scenes, " + f1 + " " + join(failures)};
}

Verdict voting() {
  const auto r = testkit::run_vote_suite();
  return {r.cases == 1024 && r.mismatches == 0,
          std::to_string(r.cases) + " answer sequences, " + std::to_string(r.mismatches) + " disagreements " +
              join(r.samples)};
}

Verdict image_ops() {
  std::vector<std::string> problems;
  backend::Scene scene = backend::Scene::from_json(nlohmann::json::parse(R"({
    "width": 40, "height": 32,
    "shapes": [{"shape": "circle", "color": "red", "box": [4, 4, 20, 20]},
               {"shape": "square", "color": "blue", "box": [22, 10, 36, 24]}]})"));
  const Image img = backend::render_scene(scene);
  ObjectRegion circle;
  circle.box = scene.shapes[0].box;
  circle.mask = backend::shape_mask(scene.shapes[0], scene.width, scene.height);
  circle.tag = "ball";
  const ObjectList objs{circle};

  const Image once = ops::color_pop(img, objs);
  if (!(ops::color_pop(once, objs) == once)) problems.push_back("color_pop is not idempotent");

  for (Rgba c : {Rgba{0, 0, 0, 255}, Rgba{17, 200, 93, 255}, Rgba{255, 255, 255, 128}}) {
    const Image flat = Image::filled(23, 17, c);
    if (!(ops::box_blur(flat) == flat)) problems.push_back("box_blur moves a constant image");
    ObjectRegion any;
    any.box = Box{2, 2, 8, 8};
    any.mask = Mask::from_rect(23, 17, PixelRect{2, 2, 8, 8});
    if (!(ops::background_blur(flat, {any}) == flat)) problems.push_back("bg_blur moves a constant image");
  }
  if (!(ops::box_blur(img) == testkit::blur_oracle(img, ops::kBlurRadius, ops::kBlurPasses))) {
    problems.push_back("box_blur disagrees with the direct window average");
  }

  auto outside_identical = [&](const Image& out, const PixelRect& keep_out, const char* what) {
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        if (!keep_out.contains(x, y) && !(out.at(x, y) == img.at(x, y))) {
          problems.push_back(std::string(what) + " changed a pixel outside its region");
          return;
        }
      }
    }
  };
  const PixelRect box = to_pixels(circle.box, img.width(), img.height());
  const Image emoji = ops::emoji(img, objs, "face_with_tongue", ops::EmojiTable::builtin());
  outside_identical(emoji, box, "emoji");
  const Image tagged = ops::tag(img, objs);
  // Outline and label are drawn inside the box and the label band above it.
  const PixelRect label = ops::label_rect(box, "ball", img.width(), img.height());
  PixelRect reach{std::min(box.x0, label.x0), std::min(box.y0, label.y0), std::max(box.x1, label.x1),
                  std::max(box.y1, label.y1)};
  outside_identical(tagged, reach, "tag");

  const auto golden = testkit::check_golden_images();
  if (!golden.written.empty()) problems.push_back("golden images were rewritten, rerun without VISTEP_UPDATE_GOLDEN");
  for (const auto& m : golden.mismatches) problems.push_back("golden " + m);
  if (golden.compared == 0 && golden.written.empty()) problems.push_back("no golden images compared");
  return {problems.empty(), std::to_string(golden.compared) + " golden PNGs compared " + join(problems)};
}

Verdict determinism() {
  std::vector<std::string> blobs;
  std::vector<std::string> dirs;
  for (int i = 0; i < 3; ++i) {
    dirs.push_back(testkit::temp_dir("determinism"));
    const auto r = testkit::run_golden_suite(dirs.back(), gen::Strategy::Voting, 3);
    if (!r.all_pass()) return {false, "golden suite failed on repetition " + std::to_string(i + 1)};
    blobs.push_back(testkit::artifact_bytes(dirs.back()));
  }
  for (const auto& d : dirs) fs::remove_all(d);
  const bool ok = !blobs[0].empty() && blobs[0] == blobs[1] && blobs[1] == blobs[2];
  return {ok, "3 voting runs, " + std::to_string(blobs[0].size()) + " artifact bytes each" +
                  (ok ? "" : ", artifacts differ")};
}

Verdict service_round_trip() {
  const std::string root = testkit::temp_dir("service");
  service::ServiceConfig cfg;
  cfg.store_path = root + "/store.db";
  cfg.image_dir = root + "/images";
  cfg.tasks["qa"] = testkit::golden_prompt("qa", gen::Strategy::Random, 3, 1);
  cfg.client = std::make_shared<gen::ReplayClient>(
      gen::ReplayClient::load(testkit::data_dir() + "/golden/completions.json"));
  cfg.backend = std::make_shared<backend::ProceduralBackend>();

  std::vector<std::string> problems;
  std::string run_id;
  std::string stored;
  {
    service::Service svc(cfg);
    const int port = svc.start();
    httplib::Client http("127.0.0.1", port);

    const auto scene = backend::Scene::from_json(nlohmann::json::parse(R"({
      "width": 80, "height": 48,
      "shapes": [{"shape": "circle", "color": "red", "box": [4, 4, 20, 20]},
                 {"shape": "circle", "color": "red", "box": [30, 6, 44, 20]},
                 {"shape": "circle", "color": "red", "box": [56, 24, 74, 42]},
                 {"shape": "square", "color": "blue", "box": [6, 28, 20, 42]}]})"));
    const auto png = codec::encode_png(backend::render_scene(scene));
    auto up = http.Post("/api/images", std::string(png.begin(), png.end()), "image/png");
    if (!up || up->status != 200) return {false, "upload failed"};
    const std::string image_id = nlohmann::json::parse(up->body).at("image_id");

    nlohmann::json gen_req{{"instruction", "How many red circles are there?"}, {"task", "qa"}, {"seed", 5}};
    auto g = http.Post("/api/generate", gen_req.dump(), "application/json");
    if (!g || g->status != 200) return {false, "generate failed: " + (g ? g->body : std::string("no response"))};
    const std::string program = nlohmann::json::parse(g->body).at("program");

    nlohmann::json ex_req{{"program", program}, {"task", "qa"}, {"input_image_ids", {image_id}}};
    auto e = http.Post("/api/execute", ex_req.dump(), "application/json");
    if (!e || e->status != 200) return {false, "execute failed: " + (e ? e->body : std::string("no response"))};
    const auto summary = nlohmann::json::parse(e->body);
    run_id = summary.at("run_id");
    if (summary.at("status") != "ok") problems.push_back("run failed: " + summary.at("error").dump());
    if (summary.value("result_summary", nlohmann::json()) != "3") {
      problems.push_back("result " + summary.value("result_summary", nlohmann::json()).dump() + ", expected 3");
    }

    auto html = http.Get("/api/runs/" + run_id + "/rationale");
    if (!html || html->status != 200 || html->body.find("<section class=\"cell\"") == std::string::npos) {
      problems.push_back("rationale missing");
    }
    auto first = http.Get("/api/runs/" + run_id);
    auto second = http.Get("/api/runs/" + run_id);
    if (!first || !second || first->status != 200 || first->body != second->body) {
      problems.push_back("stored run differs on re-fetch");
    } else if (nlohmann::json::parse(first->body).at("source") != program) {
      problems.push_back("stored run has a different program");
    } else {
      stored = first->body;
    }
    svc.stop();
  }
  {
    // Persistence: a fresh service over the same store still serves the run.
    service::Service again(cfg);
    const int port = again.start();
    httplib::Client http("127.0.0.1", port);
    auto run = http.Get("/api/runs/" + run_id);
    if (!run || run->status != 200 || run->body != stored) problems.push_back("run not persisted across restart");
    again.stop();
  }
  fs::remove_all(root);
  return {problems.empty(), "upload, generate, execute, rationale, re-fetch " + join(problems)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"metric-reproduction", 1, metric_reproduction},
      {"parser-fuzz", 30, parser_fuzz},
      {"expression-oracle", 120, expression_oracle},
      {"classify-select", 60, classify_select},
      {"golden-suite", 60, golden_suite},
      {"voting", 10, voting},
      {"image-ops", 30, image_ops},
      {"determinism", 180, determinism},
      {"service-round-trip", 30, service_round_trip},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_s) {
      v.pass = false;
      v.detail += " (over the " + std::to_string(static_cast<int>(c.budget_s)) + " s budget)";
    }
    failed += !v.pass;
    std::printf("%s %s [%.2fs] %s\n", v.pass ? "PASS" : "FAIL", c.name.c_str(), secs, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
