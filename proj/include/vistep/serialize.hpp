#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "vistep/value.hpp"

namespace vistep {

/// Content-addressed image storage. Values reference images by `Image::id()`;
/// the raster travels out of band through a store.
class ImageStore {
 public:
  virtual ~ImageStore() = default;
  virtual std::string put(const Image& image) = 0;
  virtual std::optional<Image> get(const std::string& id) const = 0;
};

class MemoryImageStore final : public ImageStore {
 public:
  std::string put(const Image& image) override;
  std::optional<Image> get(const std::string& id) const override;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, Image> images_;
};

/// Stores images as `<dir>/<id>.png`.
class DirectoryImageStore final : public ImageStore {
 public:
  explicit DirectoryImageStore(std::string dir);
  std::string put(const Image& image) override;
  std::optional<Image> get(const std::string& id) const override;
  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
  mutable std::mutex mu_;
  mutable std::map<std::string, Image> cache_;
};

nlohmann::json box_to_json(const Box& box);
Box box_from_json(const nlohmann::json& j);

/// Run-length encoding of a mask: alternating run lengths, row-major, starting
/// with a (possibly empty) run of zeros.
nlohmann::json mask_to_json(const Mask& mask);
/// Accepts the RLE form, or `{"width","height","soft":[...]}` thresholded at 0.5.
Mask mask_from_json(const nlohmann::json& j);

nlohmann::json region_to_json(const ObjectRegion& region);
ObjectRegion region_from_json(const nlohmann::json& j);

/// Canonical JSON for a Value. Images are written to `sink` (when given) and
/// referenced by id.
nlohmann::json value_to_json(const Value& value, ImageStore* sink = nullptr);
Value value_from_json(const nlohmann::json& j, const ImageStore& source);

}  // namespace vistep
