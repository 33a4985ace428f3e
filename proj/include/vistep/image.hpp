#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vistep {

struct Rgba {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  std::uint8_t a = 255;

  friend bool operator==(const Rgba&, const Rgba&) = default;
};

/// Axis-aligned box in pixel coordinates, origin top-left, y down.
struct Box {
  double x1 = 0;
  double y1 = 0;
  double x2 = 0;
  double y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool is_valid() const { return x1 <= x2 && y1 <= y2; }
  Box clamped(int image_width, int image_height) const;

  friend bool operator==(const Box&, const Box&) = default;
};

/// Integer pixel rectangle [x0, x1) x [y0, y1) obtained by rounding a Box.
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

PixelRect to_pixels(const Box& box, int image_width, int image_height);

/// Intersection over union; 0 when the union is empty.
double iou(const Box& a, const Box& b);

/// Immutable RGBA8 raster. Copies share storage; the content hash is computed
/// once at construction and doubles as the image's identity on the wire.
class Image {
 public:
  Image(int width, int height, std::vector<std::uint8_t> rgba);
  static Image filled(int width, int height, Rgba color);

  int width() const { return raster_->width; }
  int height() const { return raster_->height; }
  Rgba at(int x, int y) const;
  std::span<const std::uint8_t> bytes() const { return raster_->rgba; }
  const std::string& id() const { return raster_->id; }

  friend bool operator==(const Image& a, const Image& b) {
    return a.raster_ == b.raster_ || a.raster_->id == b.raster_->id;
  }

 private:
  struct Raster {
    int width;
    int height;
    std::vector<std::uint8_t> rgba;
    std::string id;
  };
  std::shared_ptr<const Raster> raster_;
};

/// Mutable scratch raster used by image operations before freezing into an Image.
class Canvas {
 public:
  Canvas(int width, int height, Rgba fill);
  explicit Canvas(const Image& source);

  int width() const { return width_; }
  int height() const { return height_; }
  Rgba at(int x, int y) const;
  void set(int x, int y, Rgba color);
  void blend(int x, int y, Rgba color);
  void fill_rect(const PixelRect& rect, Rgba color);
  std::vector<std::uint8_t>& raw() { return rgba_; }

  Image freeze() const;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> rgba_;
};

/// Binary raster aligned with an image.
class Mask {
 public:
  Mask(int width, int height, std::vector<std::uint8_t> bits);
  static Mask empty(int width, int height);
  static Mask from_rect(int width, int height, const PixelRect& rect);

  int width() const { return width_; }
  int height() const { return height_; }
  bool at(int x, int y) const { return (*bits_)[static_cast<std::size_t>(y) * width_ + x] != 0; }
  std::span<const std::uint8_t> bits() const { return *bits_; }
  std::size_t count() const;
  std::optional<PixelRect> extent() const;

  Mask united(const Mask& other) const;

  friend bool operator==(const Mask& a, const Mask& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && *a.bits_ == *b.bits_;
  }

 private:
  int width_;
  int height_;
  std::shared_ptr<const std::vector<std::uint8_t>> bits_;
};

}  // namespace vistep
