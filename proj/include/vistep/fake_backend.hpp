#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vistep/backend.hpp"
#include "vistep/serialize.hpp"

namespace vistep::backend {

/// Shared image bookkeeping for in-process backends.
class LocalBackend : public Backend {
 public:
  std::string put_image(const Image& image) override;
  Image get_image(const std::string& ref) override;

 protected:
  MemoryImageStore images_;
};

/// Recorded request/response pairs. An `image_ref` of "*" in a recorded
/// request matches any image.
class FixtureSet {
 public:
  /// Accepts `{"fixtures":[{"request":{...},"response":{...}}]}` or a bare array.
  static FixtureSet from_json(const nlohmann::json& j);
  static FixtureSet load(const std::string& path);
  nlohmann::json to_json() const;

  void add(const Request& request, Response response);
  const Response* find(const Request& request) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::pair<Request, Response>> entries_;
};

class FixtureBackend final : public LocalBackend {
 public:
  explicit FixtureBackend(FixtureSet fixtures) : fixtures_(std::move(fixtures)) {}

  /// Throws FixtureMiss naming the request key.
  Response call(const Request& request) override;

 private:
  FixtureSet fixtures_;
};

// Synthetic scenes: flat-coloured shapes on a background. Shape colours come
// from a fixed palette; backgrounds must not use a palette colour so shapes
// can be recovered from pixels alone.

struct SceneShape {
  std::string shape;  // rectangle | square | circle | triangle
  std::string color;
  Box box;
  std::optional<std::string> label;     // proper name, e.g. "Amy"
  std::optional<std::string> kind;      // "face" makes it visible to detect_faces
  std::optional<std::string> category;  // overrides "<color> <shape>"

  std::string category_name() const { return category ? *category : color + " " + shape; }
};

struct Scene {
  int width = 64;
  int height = 64;
  Rgba background{235, 235, 235, 255};
  std::vector<SceneShape> shapes;

  static Scene from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Named palette used by scenes. Returns nullopt for unknown names.
std::optional<Rgba> scene_color(std::string_view name);
const std::vector<std::pair<std::string, Rgba>>& scene_palette();

Image render_scene(const Scene& scene);
/// Pixels covered by `shape` on a `width` x `height` canvas.
Mask shape_mask(const SceneShape& shape, int width, int height);

/// Object recovered from a scene description or from pixels.
struct SceneObject {
  std::string shape;
  std::string color;
  Box box;
  Mask mask;
  std::optional<std::string> label;
  std::optional<std::string> kind;
  std::string category;
};

/// Connected components of palette-coloured pixels, classified by fill ratio.
std::vector<SceneObject> analyze_pixels(const Image& image);

/// Answers requests about synthetic scenes by matching colour, shape, label
/// and category words. Registered scenes contribute labels and face kinds;
/// any other image is analysed from its pixels.
class ProceduralBackend final : public LocalBackend {
 public:
  /// Renders, registers and returns the scene image.
  Image add_scene(const Scene& scene);

  /// Throws FixtureMiss for questions and ops it has no rule for.
  Response call(const Request& request) override;

  std::vector<SceneObject> objects_for(const std::string& image_ref);

 private:
  std::mutex mu_;
  std::map<std::string, Scene> scenes_;
};

/// Tries each backend in order, moving on when one raises FixtureMiss.
class ChainBackend final : public Backend {
 public:
  explicit ChainBackend(std::vector<std::shared_ptr<Backend>> links) : links_(std::move(links)) {}

  std::string put_image(const Image& image) override;
  Image get_image(const std::string& ref) override;
  Response call(const Request& request) override;

 private:
  std::vector<std::shared_ptr<Backend>> links_;
};

/// Query words with stop words removed and plurals folded.
std::vector<std::string> content_words(std::string_view text);

}  // namespace vistep::backend
