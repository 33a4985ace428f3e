#include "vistep/serialize.hpp"

#include <cmath>
#include <filesystem>

#include "vistep/codec.hpp"
#include "vistep/error.hpp"

namespace vistep {

namespace {

[[noreturn]] void bad_document(const std::string& what) { throw Error(ErrorCode::InvalidDocument, what); }

const nlohmann::json& field(const nlohmann::json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) bad_document(std::string("missing field '") + name + "'");
  return j.at(name);
}

nlohmann::json number_to_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "nan") return std::nan("");
    if (s == "inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
  }
  bad_document("expected a number");
}

std::optional<std::string> optional_text(const nlohmann::json& j, const char* name) {
  if (!j.contains(name) || j.at(name).is_null()) return std::nullopt;
  return j.at(name).get<std::string>();
}

}  // namespace

std::string MemoryImageStore::put(const Image& image) {
  std::lock_guard lock(mu_);
  images_.emplace(image.id(), image);
  return image.id();
}

std::optional<Image> MemoryImageStore::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = images_.find(id);
  if (it == images_.end()) return std::nullopt;
  return it->second;
}

std::size_t MemoryImageStore::size() const {
  std::lock_guard lock(mu_);
  return images_.size();
}

DirectoryImageStore::DirectoryImageStore(std::string dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::string DirectoryImageStore::put(const Image& image) {
  std::lock_guard lock(mu_);
  if (!cache_.contains(image.id())) {
    auto path = std::filesystem::path(dir_) / (image.id() + ".png");
    if (!std::filesystem::exists(path)) codec::save_png(path.string(), image);
    cache_.emplace(image.id(), image);
  }
  return image.id();
}

std::optional<Image> DirectoryImageStore::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  if (auto it = cache_.find(id); it != cache_.end()) return it->second;
  if (id.empty() || id.find_first_not_of("0123456789abcdef") != std::string::npos) return std::nullopt;
  auto path = std::filesystem::path(dir_) / (id + ".png");
  if (!std::filesystem::exists(path)) return std::nullopt;
  Image img = codec::load_image(path.string());
  cache_.emplace(id, img);
  return img;
}

nlohmann::json box_to_json(const Box& b) {
  return nlohmann::json::array({number_to_json(b.x1), number_to_json(b.y1), number_to_json(b.x2), number_to_json(b.y2)});
}

Box box_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) bad_document("box must be a 4-element array");
  Box b{number_from_json(j[0]), number_from_json(j[1]), number_from_json(j[2]), number_from_json(j[3])};
  if (!b.is_valid()) bad_document("box must satisfy x1 <= x2 and y1 <= y2");
  return b;
}

nlohmann::json mask_to_json(const Mask& mask) {
  nlohmann::json runs = nlohmann::json::array();
  std::uint8_t current = 0;
  std::size_t run = 0;
  for (auto bit : mask.bits()) {
    if (bit == current) {
      ++run;
    } else {
      runs.push_back(run);
      current = bit;
      run = 1;
    }
  }
  runs.push_back(run);
  return {{"width", mask.width()}, {"height", mask.height()}, {"rle", std::move(runs)}};
}

Mask mask_from_json(const nlohmann::json& j) {
  const int width = field(j, "width").get<int>();
  const int height = field(j, "height").get<int>();
  if (width < 1 || height < 1) bad_document("mask dimensions must be positive");
  const std::size_t total = static_cast<std::size_t>(width) * height;
  std::vector<std::uint8_t> bits;
  bits.reserve(total);
  if (j.contains("soft")) {
    const auto& soft = j.at("soft");
    if (!soft.is_array() || soft.size() != total) bad_document("soft mask size does not match dimensions");
    for (const auto& v : soft) bits.push_back(v.get<double>() >= 0.5 ? 1 : 0);
    return Mask(width, height, std::move(bits));
  }
  std::uint8_t current = 0;
  for (const auto& run : field(j, "rle")) {
    const auto n = run.get<std::size_t>();
    if (bits.size() + n > total) bad_document("mask RLE overruns dimensions");
    bits.insert(bits.end(), n, current);
    current ^= 1;
  }
  if (bits.size() != total) bad_document("mask RLE does not cover dimensions");
  return Mask(width, height, std::move(bits));
}

nlohmann::json region_to_json(const ObjectRegion& r) {
  nlohmann::json j;
  j["box"] = box_to_json(r.box);
  j["mask"] = r.mask ? mask_to_json(*r.mask) : nlohmann::json();
  j["score"] = number_to_json(r.score);
  j["category"] = r.category ? nlohmann::json(*r.category) : nlohmann::json();
  j["tag"] = r.tag ? nlohmann::json(*r.tag) : nlohmann::json();
  return j;
}

ObjectRegion region_from_json(const nlohmann::json& j) {
  ObjectRegion r;
  r.box = box_from_json(field(j, "box"));
  if (j.contains("mask") && !j.at("mask").is_null()) r.mask = mask_from_json(j.at("mask"));
  r.score = j.contains("score") ? number_from_json(j.at("score")) : 1.0;
  r.category = optional_text(j, "category");
  r.tag = optional_text(j, "tag");
  return r;
}

nlohmann::json value_to_json(const Value& value, ImageStore* sink) {
  nlohmann::json j;
  j["kind"] = to_string(value.kind());
  switch (value.kind()) {
    case ValueKind::Null: break;
    case ValueKind::Text: j["value"] = value.as_text(); break;
    case ValueKind::Number: j["value"] = number_to_json(value.as_number()); break;
    case ValueKind::Boolean: j["value"] = value.as_boolean(); break;
    case ValueKind::Image: {
      const auto& img = value.as_image();
      if (sink) sink->put(img);
      j["id"] = img.id();
      j["width"] = img.width();
      j["height"] = img.height();
      break;
    }
    case ValueKind::Box: j["value"] = box_to_json(value.as_box()); break;
    case ValueKind::Mask: j["value"] = mask_to_json(value.as_mask()); break;
    case ValueKind::ObjectList: {
      auto arr = nlohmann::json::array();
      for (const auto& r : value.as_objects()) arr.push_back(region_to_json(r));
      j["value"] = std::move(arr);
      break;
    }
    case ValueKind::TextList: j["value"] = value.as_texts(); break;
  }
  return j;
}

Value value_from_json(const nlohmann::json& j, const ImageStore& source) {
  const auto kind_name = field(j, "kind").get<std::string>();
  auto kind = value_kind_from_string(kind_name);
  if (!kind) bad_document("unknown value kind '" + kind_name + "'");
  switch (*kind) {
    case ValueKind::Null: return Value::null();
    case ValueKind::Text: return Value::text(field(j, "value").get<std::string>());
    case ValueKind::Number: return Value::number(number_from_json(field(j, "value")));
    case ValueKind::Boolean: return Value::boolean(field(j, "value").get<bool>());
    case ValueKind::Image: {
      const auto id = field(j, "id").get<std::string>();
      auto img = source.get(id);
      if (!img) throw Error(ErrorCode::NotFound, "image " + id + " is not in the store", {{"image_id", id}});
      return Value::image(*img);
    }
    case ValueKind::Box: return Value::box(box_from_json(field(j, "value")));
    case ValueKind::Mask: return Value::mask(mask_from_json(field(j, "value")));
    case ValueKind::ObjectList: {
      ObjectList objs;
      for (const auto& r : field(j, "value")) objs.push_back(region_from_json(r));
      return Value::objects(std::move(objs));
    }
    case ValueKind::TextList: return Value::texts(field(j, "value").get<TextList>());
  }
  bad_document("unreachable value kind");
}

}  // namespace vistep
