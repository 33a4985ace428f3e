#include "vistep/fake_backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include "vistep/codec.hpp"
#include "vistep/error.hpp"
#include "vistep/value.hpp"

namespace vistep::backend {

namespace {

const std::set<std::string>& stop_words() {
  static const std::set<std::string> words{"a",   "an",   "the", "of",    "in",  "on",   "is",  "are",
                                           "there", "any", "and", "to",  "with", "that", "this", "some"};
  return words;
}

std::string fold_plural(std::string w) {
  if (w.size() > 3 && w.back() == 's' && w[w.size() - 2] != 's') {
    if (w.size() > 4 && w.ends_with("es")) {
      const std::string stem = w.substr(0, w.size() - 2);
      if (stem.ends_with("x") || stem.ends_with("ch") || stem.ends_with("sh") || stem.ends_with("ss")) return stem;
    }
    w.pop_back();
  }
  return w;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::set<std::string> tokens_of(const SceneObject& obj) {
  std::set<std::string> t{"object", "shape", "thing", "item"};
  auto add = [&](std::string_view text) {
    for (auto& w : content_words(text)) t.insert(w);
  };
  add(obj.color);
  add(obj.shape);
  if (obj.shape == "square") t.insert("rectangle");
  add(obj.category);
  if (obj.label) add(*obj.label);
  if (obj.kind) add(*obj.kind);
  return t;
}

bool matches(const std::vector<std::string>& words, const SceneObject& obj) {
  const auto t = tokens_of(obj);
  return std::all_of(words.begin(), words.end(), [&](const std::string& w) { return t.contains(w); });
}

double overlap_score(const std::vector<std::string>& words, const SceneObject& obj) {
  if (words.empty()) return 0.0;
  const auto t = tokens_of(obj);
  const auto hit = std::count_if(words.begin(), words.end(), [&](const std::string& w) { return t.contains(w); });
  return static_cast<double>(hit) / static_cast<double>(words.size());
}

[[noreturn]] void miss(const Request& request, const std::string& why) {
  throw Error(ErrorCode::FixtureMiss, why, {{"key", request.key()}, {"op", to_string(request.op)}});
}

Rgba parse_color(const nlohmann::json& j) {
  if (j.is_string()) {
    auto c = scene_color(j.get<std::string>());
    if (!c) throw Error(ErrorCode::InvalidDocument, "unknown scene colour '" + j.get<std::string>() + "'");
    return *c;
  }
  if (j.is_array() && (j.size() == 3 || j.size() == 4)) {
    Rgba c;
    c.r = j.at(0).get<std::uint8_t>();
    c.g = j.at(1).get<std::uint8_t>();
    c.b = j.at(2).get<std::uint8_t>();
    return c;
  }
  throw Error(ErrorCode::InvalidDocument, "colour must be a palette name or [r,g,b]");
}

bool is_palette(Rgba c) {
  for (const auto& [name, p] : scene_palette()) {
    if (p.r == c.r && p.g == c.g && p.b == c.b) return true;
  }
  return false;
}

std::string shape_from_fill(int w, int h, std::size_t count) {
  const double fill = static_cast<double>(count) / (static_cast<double>(w) * h);
  if (fill >= 0.92) {
    const int longest = std::max(w, h);
    return std::abs(w - h) <= std::max(1, longest / 10) ? "square" : "rectangle";
  }
  if (fill >= 0.64) return "circle";
  return "triangle";
}

}  // namespace

std::vector<std::string> content_words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && !stop_words().contains(cur)) out.push_back(fold_plural(cur));
    cur.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

// --- LocalBackend ---------------------------------------------------------

std::string LocalBackend::put_image(const Image& image) { return images_.put(image); }

Image LocalBackend::get_image(const std::string& ref) {
  auto img = images_.get(ref);
  if (!img) throw Error(ErrorCode::NotFound, "image " + ref + " is not known to the backend", {{"image_ref", ref}});
  return *img;
}

// --- fixtures ---------------------------------------------------------------

FixtureSet FixtureSet::from_json(const nlohmann::json& j) {
  const nlohmann::json& list = j.is_object() && j.contains("fixtures") ? j.at("fixtures") : j;
  if (!list.is_array()) throw Error(ErrorCode::InvalidDocument, "fixtures must be an array");
  FixtureSet set;
  for (const auto& entry : list) {
    if (!entry.contains("request") || !entry.contains("response")) {
      throw Error(ErrorCode::InvalidDocument, "fixture entries need 'request' and 'response'");
    }
    set.add(Request::from_json(entry.at("request")), Response::from_json(entry.at("response")));
  }
  return set;
}

FixtureSet FixtureSet::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open fixture file " + path, {{"path", path}});
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidDocument, "fixture file " + path + ": " + e.what(), {{"path", path}});
  }
}

nlohmann::json FixtureSet::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& [key, entry] : entries_) {
    arr.push_back({{"request", entry.first.to_json()}, {"response", entry.second.to_json()}});
  }
  return {{"fixtures", std::move(arr)}};
}

void FixtureSet::add(const Request& request, Response response) {
  entries_.insert_or_assign(request.key(), std::make_pair(request, std::move(response)));
}

const Response* FixtureSet::find(const Request& request) const {
  if (auto it = entries_.find(request.key()); it != entries_.end()) return &it->second.second;
  if (request.image_ref) {
    Request wild = request;
    wild.image_ref = "*";
    if (auto it = entries_.find(wild.key()); it != entries_.end()) return &it->second.second;
  }
  return nullptr;
}

Response FixtureBackend::call(const Request& request) {
  request.check();
  const Response* r = fixtures_.find(request);
  if (!r) miss(request, "no fixture for request " + request.key());
  r->check_against(request);
  return *r;
}

// --- scenes -----------------------------------------------------------------

const std::vector<std::pair<std::string, Rgba>>& scene_palette() {
  static const std::vector<std::pair<std::string, Rgba>> palette{
      {"red", {220, 30, 30, 255}},    {"green", {30, 160, 60, 255}},  {"blue", {30, 80, 220, 255}},
      {"yellow", {240, 200, 20, 255}}, {"orange", {245, 130, 30, 255}}, {"purple", {140, 50, 180, 255}},
      {"pink", {240, 120, 190, 255}},  {"brown", {140, 90, 40, 255}},  {"black", {20, 20, 20, 255}},
      {"gray", {128, 128, 128, 255}},  {"cyan", {30, 200, 220, 255}},  {"white", {255, 255, 255, 255}},
  };
  return palette;
}

std::optional<Rgba> scene_color(std::string_view name) {
  const auto key = lower(name) == "grey" ? std::string("gray") : lower(name);
  for (const auto& [n, c] : scene_palette()) {
    if (n == key) return c;
  }
  return std::nullopt;
}

Scene Scene::from_json(const nlohmann::json& j) {
  try {
    Scene s;
    s.width = j.value("width", 64);
    s.height = j.value("height", 64);
    if (s.width < 1 || s.height < 1) throw Error(ErrorCode::InvalidDocument, "scene dimensions must be positive");
    if (j.contains("background")) {
      const auto& bg = j.at("background");
      if (bg.is_string()) {
        throw Error(ErrorCode::InvalidDocument, "scene background must be an [r,g,b] triple outside the palette");
      }
      s.background = parse_color(bg);
      if (is_palette(s.background)) {
        throw Error(ErrorCode::InvalidDocument, "scene background must not use a palette colour");
      }
    }
    for (const auto& sj : j.value("shapes", nlohmann::json::array())) {
      SceneShape sh;
      sh.shape = lower(sj.at("shape").get<std::string>());
      if (sh.shape != "rectangle" && sh.shape != "square" && sh.shape != "circle" && sh.shape != "triangle") {
        throw Error(ErrorCode::InvalidDocument, "unknown scene shape '" + sh.shape + "'");
      }
      sh.color = lower(sj.at("color").get<std::string>());
      if (!scene_color(sh.color)) throw Error(ErrorCode::InvalidDocument, "unknown scene colour '" + sh.color + "'");
      sh.box = box_from_json(sj.at("box"));
      if (sj.contains("label")) sh.label = sj.at("label").get<std::string>();
      if (sj.contains("kind")) sh.kind = sj.at("kind").get<std::string>();
      if (sj.contains("category")) sh.category = sj.at("category").get<std::string>();
      s.shapes.push_back(std::move(sh));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidDocument, std::string("invalid scene: ") + e.what());
  }
}

nlohmann::json Scene::to_json() const {
  auto shapes_json = nlohmann::json::array();
  for (const auto& sh : shapes) {
    nlohmann::json o{{"shape", sh.shape}, {"color", sh.color}, {"box", box_to_json(sh.box)}};
    if (sh.label) o["label"] = *sh.label;
    if (sh.kind) o["kind"] = *sh.kind;
    if (sh.category) o["category"] = *sh.category;
    shapes_json.push_back(std::move(o));
  }
  return {{"width", width},
          {"height", height},
          {"background", {background.r, background.g, background.b}},
          {"shapes", std::move(shapes_json)}};
}

Mask shape_mask(const SceneShape& shape, int width, int height) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(width) * height, 0);
  const Box& b = shape.box;
  const double cx = (b.x1 + b.x2) / 2.0;
  const double cy = (b.y1 + b.y2) / 2.0;
  const double rx = b.width() / 2.0;
  const double ry = b.height() / 2.0;
  const PixelRect r = to_pixels(b, width, height);
  for (int y = r.y0; y < r.y1; ++y) {
    for (int x = r.x0; x < r.x1; ++x) {
      const double px = x + 0.5;
      const double py = y + 0.5;
      bool in = true;
      if (shape.shape == "circle") {
        const double dx = (px - cx) / rx;
        const double dy = (py - cy) / ry;
        in = dx * dx + dy * dy <= 1.0;
      } else if (shape.shape == "triangle") {
        const double t = (py - b.y1) / b.height();
        in = t >= 0.0 && t <= 1.0 && std::abs(px - cx) <= t * rx;
      }
      if (in) bits[static_cast<std::size_t>(y) * width + x] = 1;
    }
  }
  return Mask(width, height, std::move(bits));
}

Image render_scene(const Scene& scene) {
  Canvas canvas(scene.width, scene.height, scene.background);
  for (const auto& sh : scene.shapes) {
    const Mask m = shape_mask(sh, scene.width, scene.height);
    const Rgba c = *scene_color(sh.color);
    for (int y = 0; y < scene.height; ++y) {
      for (int x = 0; x < scene.width; ++x) {
        if (m.at(x, y)) canvas.set(x, y, c);
      }
    }
  }
  return canvas.freeze();
}

std::vector<SceneObject> analyze_pixels(const Image& image) {
  const int w = image.width();
  const int h = image.height();
  const auto& palette = scene_palette();
  std::vector<int> color_of(static_cast<std::size_t>(w) * h, -1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Rgba p = image.at(x, y);
      for (std::size_t i = 0; i < palette.size(); ++i) {
        const Rgba& c = palette[i].second;
        if (p.r == c.r && p.g == c.g && p.b == c.b) {
          color_of[static_cast<std::size_t>(y) * w + x] = static_cast<int>(i);
          break;
        }
      }
    }
  }

  std::vector<SceneObject> out;
  std::vector<std::uint8_t> seen(color_of.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < color_of.size(); ++start) {
    if (color_of[start] < 0 || seen[start]) continue;
    const int ci = color_of[start];
    std::vector<std::uint8_t> bits(color_of.size(), 0);
    std::size_t count = 0;
    int x0 = w, y0 = h, x1 = 0, y1 = 0;
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t idx = stack.back();
      stack.pop_back();
      const int x = static_cast<int>(idx % w);
      const int y = static_cast<int>(idx / w);
      bits[idx] = 1;
      ++count;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x + 1);
      y1 = std::max(y1, y + 1);
      const int nx[4] = {x - 1, x + 1, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
        const std::size_t n = static_cast<std::size_t>(ny[k]) * w + nx[k];
        if (!seen[n] && color_of[n] == ci) {
          seen[n] = 1;
          stack.push_back(n);
        }
      }
    }
    if (count < 4) continue;
    SceneObject obj{shape_from_fill(x1 - x0, y1 - y0, count),
                    palette[static_cast<std::size_t>(ci)].first,
                    Box{static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x1), static_cast<double>(y1)},
                    Mask(w, h, std::move(bits)),
                    std::nullopt,
                    std::nullopt,
                    {}};
    obj.category = obj.color + " " + obj.shape;
    out.push_back(std::move(obj));
  }
  return out;
}

// --- procedural backend -------------------------------------------------------

Image ProceduralBackend::add_scene(const Scene& scene) {
  Image img = render_scene(scene);
  put_image(img);
  std::lock_guard lock(mu_);
  scenes_.insert_or_assign(img.id(), scene);
  return img;
}

std::vector<SceneObject> ProceduralBackend::objects_for(const std::string& image_ref) {
  std::optional<Scene> scene;
  {
    std::lock_guard lock(mu_);
    if (auto it = scenes_.find(image_ref); it != scenes_.end()) scene = it->second;
  }
  if (!scene) return analyze_pixels(get_image(image_ref));

  // Visible masks: later shapes are drawn on top of earlier ones.
  std::vector<Mask> masks;
  for (const auto& sh : scene->shapes) masks.push_back(shape_mask(sh, scene->width, scene->height));
  std::vector<SceneObject> out;
  for (std::size_t i = 0; i < scene->shapes.size(); ++i) {
    std::vector<std::uint8_t> bits(masks[i].bits().begin(), masks[i].bits().end());
    for (std::size_t j = i + 1; j < masks.size(); ++j) {
      const auto above = masks[j].bits();
      for (std::size_t k = 0; k < bits.size(); ++k) {
        if (above[k]) bits[k] = 0;
      }
    }
    Mask visible(scene->width, scene->height, std::move(bits));
    if (visible.count() == 0) continue;
    const auto& sh = scene->shapes[i];
    out.push_back({sh.shape, sh.color, sh.box.clamped(scene->width, scene->height), std::move(visible), sh.label,
                   sh.kind, sh.category_name()});
  }
  return out;
}

Response ProceduralBackend::call(const Request& request) {
  request.check();
  Response resp;
  switch (request.op) {
    case Op::Locate: {
      const auto words = content_words(*request.query);
      for (const auto& obj : objects_for(*request.image_ref)) {
        if (matches(words, obj)) resp.regions.push_back({obj.box, std::nullopt, 1.0, obj.category, std::nullopt});
      }
      break;
    }
    case Op::DetectFaces:
      for (const auto& obj : objects_for(*request.image_ref)) {
        if (obj.kind && lower(*obj.kind) == "face") {
          resp.regions.push_back({obj.box, std::nullopt, 1.0, std::string("face"), std::nullopt});
        }
      }
      break;
    case Op::Segment:
      for (auto& obj : objects_for(*request.image_ref)) {
        resp.regions.push_back({obj.box, std::move(obj.mask), 1.0, obj.category, std::nullopt});
      }
      break;
    case Op::ScoreRegions: {
      const auto objects = objects_for(*request.image_ref);
      for (const auto& box : request.boxes) {
        const SceneObject* best = nullptr;
        double best_iou = 0.5;
        for (const auto& obj : objects) {
          const double v = iou(box, obj.box);
          if (v >= best_iou) {
            best_iou = v;
            best = &obj;
          }
        }
        std::vector<double> row;
        for (const auto& text : request.texts) row.push_back(best ? overlap_score(content_words(text), *best) : 0.0);
        resp.scores.push_back(std::move(row));
      }
      break;
    }
    case Op::Vqa: {
      std::string q = lower(*request.question);
      while (!q.empty() && (q.back() == '?' || q.back() == ' ' || q.back() == '.')) q.pop_back();
      const auto objects = objects_for(*request.image_ref);
      auto select = [&](std::string_view phrase) {
        std::vector<const SceneObject*> hits;
        const auto words = content_words(phrase);
        for (const auto& obj : objects) {
          if (matches(words, obj)) hits.push_back(&obj);
        }
        return hits;
      };
      auto after = [&](std::initializer_list<std::string_view> prefixes) -> std::optional<std::string> {
        for (auto p : prefixes) {
          if (q.starts_with(p)) return q.substr(p.size());
        }
        return std::nullopt;
      };
      if (auto rest = after({"how many "})) {
        std::string phrase = *rest;
        for (std::string_view tail : {" are there", " are in the image", " can you see", " do you see"}) {
          if (phrase.ends_with(tail)) phrase.resize(phrase.size() - tail.size());
        }
        resp.answer = std::to_string(select(phrase).size());
      } else if (auto rest2 = after({"is there ", "are there ", "is there any ", "are there any "})) {
        resp.answer = select(*rest2).empty() ? "no" : "yes";
      } else if (auto rest3 = after({"what color is ", "what colour is ", "what is the color of ", "what is the colour of "})) {
        auto hits = select(*rest3);
        resp.answer = hits.empty() ? "none" : hits.front()->color;
      } else if (auto rest4 = after({"what shape is ", "what is the shape of "})) {
        auto hits = select(*rest4);
        resp.answer = hits.empty() ? "none" : hits.front()->shape;
      } else {
        miss(request, "procedural backend has no rule for question '" + *request.question + "'");
      }
      break;
    }
    case Op::Inpaint: {
      const Image src = get_image(*request.image_ref);
      const Mask& m = *request.mask;
      if (m.width() != src.width() || m.height() != src.height()) {
        throw Error(ErrorCode::InvalidArgument, "inpaint mask size does not match the image");
      }
      std::optional<Rgba> fill;
      for (const auto& w : content_words(*request.prompt)) {
        if ((fill = scene_color(w))) break;
      }
      if (!fill) {
        const auto h = codec::sha256_hex(*request.prompt);
        auto byte = [&](int i) { return static_cast<std::uint8_t>(std::stoi(h.substr(i * 2, 2), nullptr, 16)); };
        fill = Rgba{byte(0), byte(1), byte(2), 255};
      }
      Canvas canvas(src);
      for (int y = 0; y < src.height(); ++y) {
        for (int x = 0; x < src.width(); ++x) {
          if (m.at(x, y)) canvas.set(x, y, *fill);
        }
      }
      resp.image_ref = put_image(canvas.freeze());
      break;
    }
    case Op::KnowledgeList:
      miss(request, "procedural backend has no knowledge source");
  }
  resp.check_against(request);
  return resp;
}

// --- chain --------------------------------------------------------------------

std::string ChainBackend::put_image(const Image& image) {
  std::string ref = image.id();
  for (auto& link : links_) ref = link->put_image(image);
  return ref;
}

Image ChainBackend::get_image(const std::string& ref) {
  for (auto& link : links_) {
    try {
      return link->get_image(ref);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotFound) throw;
    }
  }
  throw Error(ErrorCode::NotFound, "image " + ref + " is not known to any backend", {{"image_ref", ref}});
}

Response ChainBackend::call(const Request& request) {
  std::optional<Error> last;
  for (auto& link : links_) {
    try {
      return link->call(request);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::FixtureMiss) throw;
      last = e;
    }
  }
  if (last) throw *last;
  throw Error(ErrorCode::FixtureMiss, "no backend configured", {{"key", request.key()}});
}

}  // namespace vistep::backend
