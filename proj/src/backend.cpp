#include "vistep/backend.hpp"

#include "vistep/error.hpp"
#include "vistep/serialize.hpp"

namespace vistep::backend {

namespace {

constexpr std::pair<Op, std::string_view> kOps[] = {
    {Op::Locate, "locate"},   {Op::DetectFaces, "detect_faces"}, {Op::Segment, "segment"},
    {Op::Vqa, "vqa"},         {Op::ScoreRegions, "score_regions"}, {Op::Inpaint, "inpaint"},
    {Op::KnowledgeList, "knowledge_list"},
};

[[noreturn]] void missing(Op op, const char* field) {
  throw Error(ErrorCode::InvalidArgument,
              "request '" + std::string(to_string(op)) + "' requires field '" + field + "'",
              {{"op", to_string(op)}, {"field", field}});
}

[[noreturn]] void bad_response(const Request& req, const std::string& what) {
  throw Error(ErrorCode::BackendError, "invalid '" + std::string(to_string(req.op)) + "' response: " + what,
              {{"op", to_string(req.op)}});
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

template <typename T>
std::optional<T> opt(const nlohmann::json& j, const char* name) {
  if (!j.contains(name) || j.at(name).is_null()) return std::nullopt;
  return j.at(name).get<T>();
}

}  // namespace

std::string_view to_string(Op op) {
  for (const auto& [o, n] : kOps) {
    if (o == op) return n;
  }
  return "unknown";
}

std::optional<Op> op_from_string(std::string_view name) {
  for (const auto& [o, n] : kOps) {
    if (n == name) return o;
  }
  return std::nullopt;
}

void Request::check() const {
  const bool needs_image = op != Op::KnowledgeList;
  if (needs_image && !image_ref) missing(op, "image_ref");
  switch (op) {
    case Op::Locate:
      if (!query) missing(op, "query");
      break;
    case Op::Vqa:
      if (!question) missing(op, "question");
      break;
    case Op::ScoreRegions:
      if (texts.empty()) missing(op, "texts");
      break;
    case Op::Inpaint:
      if (!mask) missing(op, "mask");
      if (!prompt) missing(op, "prompt");
      break;
    case Op::KnowledgeList:
      if (!query) missing(op, "query");
      if (max && *max < 1) {
        throw Error(ErrorCode::InvalidArgument, "knowledge_list max must be at least 1", {{"max", *max}});
      }
      break;
    case Op::DetectFaces:
    case Op::Segment: break;
  }
}

nlohmann::json Request::to_json() const {
  nlohmann::json j{{"op", to_string(op)}};
  if (image_ref) j["image_ref"] = *image_ref;
  if (query) j["query"] = *query;
  if (question) j["question"] = *question;
  if (!boxes.empty()) {
    auto arr = nlohmann::json::array();
    for (const auto& b : boxes) arr.push_back(box_to_json(b));
    j["boxes"] = std::move(arr);
  }
  if (!texts.empty()) j["texts"] = texts;
  if (mask) j["mask"] = mask_to_json(*mask);
  if (prompt) j["prompt"] = *prompt;
  if (max) j["max"] = *max;
  return j;
}

Request Request::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("op")) throw Error(ErrorCode::InvalidDocument, "request must be an object with 'op'");
  Request r;
  const auto name = j.at("op").get<std::string>();
  auto op = op_from_string(name);
  if (!op) throw Error(ErrorCode::InvalidArgument, "unknown backend op '" + name + "'", {{"op", name}});
  r.op = *op;
  r.image_ref = opt<std::string>(j, "image_ref");
  r.query = opt<std::string>(j, "query");
  r.question = opt<std::string>(j, "question");
  if (j.contains("boxes")) {
    for (const auto& b : j.at("boxes")) r.boxes.push_back(box_from_json(b));
  }
  if (j.contains("texts")) r.texts = j.at("texts").get<std::vector<std::string>>();
  if (j.contains("mask") && !j.at("mask").is_null()) r.mask = mask_from_json(j.at("mask"));
  r.prompt = opt<std::string>(j, "prompt");
  r.max = opt<int>(j, "max");
  return r;
}

std::string Request::key() const { return to_json().dump(); }

void Response::check_against(const Request& req) const {
  switch (req.op) {
    case Op::Locate:
    case Op::DetectFaces:
    case Op::Segment:
      for (const auto& r : regions) {
        if (!in_unit(r.score)) bad_response(req, "region score outside [0,1]");
        if (!r.box.is_valid()) bad_response(req, "region box has x1 > x2 or y1 > y2");
      }
      break;
    case Op::Vqa:
      if (!answer) bad_response(req, "missing 'answer'");
      break;
    case Op::ScoreRegions:
      if (scores.size() != req.boxes.size()) bad_response(req, "score matrix rows do not match the number of boxes");
      for (const auto& row : scores) {
        if (row.size() != req.texts.size()) bad_response(req, "score matrix columns do not match the number of texts");
        for (double s : row) {
          if (!in_unit(s)) bad_response(req, "score outside [0,1]");
        }
      }
      break;
    case Op::Inpaint:
      if (!image_ref) bad_response(req, "missing 'image_ref'");
      break;
    case Op::KnowledgeList:
      if (texts.empty() && !answer) bad_response(req, "missing 'texts' or 'answer'");
      break;
  }
}

nlohmann::json Response::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  if (!regions.empty()) {
    auto arr = nlohmann::json::array();
    for (const auto& r : regions) arr.push_back(region_to_json(r));
    j["regions"] = std::move(arr);
  }
  if (answer) j["answer"] = *answer;
  if (!scores.empty()) j["scores"] = scores;
  if (image_ref) j["image_ref"] = *image_ref;
  if (!texts.empty()) j["texts"] = texts;
  return j;
}

Response Response::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidDocument, "response must be a JSON object");
  Response r;
  if (j.contains("regions")) {
    for (const auto& reg : j.at("regions")) r.regions.push_back(region_from_json(reg));
  }
  r.answer = opt<std::string>(j, "answer");
  if (j.contains("scores")) r.scores = j.at("scores").get<std::vector<std::vector<double>>>();
  r.image_ref = opt<std::string>(j, "image_ref");
  if (j.contains("texts")) r.texts = j.at("texts").get<TextList>();
  return r;
}

}  // namespace vistep::backend
