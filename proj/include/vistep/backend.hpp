#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vistep/value.hpp"

namespace vistep::backend {

// Neural capabilities are reached only through this protocol. Requests carry
// images by content hash; the pixels are uploaded separately via put_image().

enum class Op { Locate, DetectFaces, Segment, Vqa, ScoreRegions, Inpaint, KnowledgeList };

std::string_view to_string(Op op);
std::optional<Op> op_from_string(std::string_view name);

struct Request {
  Op op = Op::Locate;
  std::optional<std::string> image_ref;
  std::optional<std::string> query;     // locate, knowledge_list
  std::optional<std::string> question;  // vqa
  std::vector<Box> boxes;               // score_regions
  std::vector<std::string> texts;       // score_regions
  std::optional<Mask> mask;             // inpaint
  std::optional<std::string> prompt;    // inpaint, knowledge_list
  std::optional<int> max;               // knowledge_list

  /// Throws InvalidArgument when a field required by `op` is absent.
  void check() const;

  nlohmann::json to_json() const;
  static Request from_json(const nlohmann::json& j);

  /// Canonical fixture key: the request JSON with sorted keys, compact.
  std::string key() const;
};

struct Response {
  ObjectList regions;                     // locate, detect_faces, segment
  std::optional<std::string> answer;      // vqa; knowledge_list (comma separated)
  std::vector<std::vector<double>> scores;  // score_regions: boxes x texts
  std::optional<std::string> image_ref;   // inpaint
  TextList texts;                         // knowledge_list

  /// Throws BackendError when the payload is inconsistent with `request`
  /// (scores outside [0,1], matrix shape, missing op-specific field).
  void check_against(const Request& request) const;

  nlohmann::json to_json() const;
  static Response from_json(const nlohmann::json& j);

  friend bool operator==(const Response&, const Response&) = default;
};

class Backend {
 public:
  virtual ~Backend() = default;

  /// Makes the image available to subsequent requests; returns its ref.
  virtual std::string put_image(const Image& image) = 0;
  /// Throws Error{NotFound}.
  virtual Image get_image(const std::string& ref) = 0;
  virtual Response call(const Request& request) = 0;
};

}  // namespace vistep::backend
