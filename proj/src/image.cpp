#include "vistep/image.hpp"

#include <algorithm>
#include <cmath>

#include "vistep/codec.hpp"
#include "vistep/error.hpp"

namespace vistep {

namespace {

int round_clamp(double v, int hi) {
  if (std::isnan(v)) return 0;
  double r = std::round(std::clamp(v, -1e9, 1e9));
  return std::clamp(static_cast<int>(r), 0, hi);
}

std::string raster_id(int width, int height, std::span<const std::uint8_t> rgba) {
  std::vector<std::uint8_t> buf;
  buf.reserve(rgba.size() + 8);
  for (int v : {width, height}) {
    for (int s = 24; s >= 0; s -= 8) buf.push_back(static_cast<std::uint8_t>((v >> s) & 0xff));
  }
  buf.insert(buf.end(), rgba.begin(), rgba.end());
  return codec::sha256_hex(buf);
}

}  // namespace

Box Box::clamped(int image_width, int image_height) const {
  auto cx = [&](double v) { return std::clamp(v, 0.0, static_cast<double>(image_width)); };
  auto cy = [&](double v) { return std::clamp(v, 0.0, static_cast<double>(image_height)); };
  Box out{cx(x1), cy(y1), cx(x2), cy(y2)};
  if (out.x2 < out.x1) std::swap(out.x1, out.x2);
  if (out.y2 < out.y1) std::swap(out.y1, out.y2);
  return out;
}

PixelRect to_pixels(const Box& box, int image_width, int image_height) {
  PixelRect r{round_clamp(box.x1, image_width), round_clamp(box.y1, image_height),
              round_clamp(box.x2, image_width), round_clamp(box.y2, image_height)};
  if (r.x1 < r.x0) std::swap(r.x0, r.x1);
  if (r.y1 < r.y0) std::swap(r.y0, r.y1);
  return r;
}

double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  const double inter = (iw > 0 && ih > 0) ? iw * ih : 0.0;
  const double uni = std::max(0.0, a.area()) + std::max(0.0, b.area()) - inter;
  return uni > 0 ? inter / uni : 0.0;
}

Image::Image(int width, int height, std::vector<std::uint8_t> rgba) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidImage, "image dimensions must be at least 1x1",
                {{"width", width}, {"height", height}});
  }
  if (rgba.size() != static_cast<std::size_t>(width) * height * 4) {
    throw Error(ErrorCode::InvalidImage, "pixel buffer size does not match dimensions",
                {{"width", width}, {"height", height}, {"bytes", rgba.size()}});
  }
  auto id = raster_id(width, height, rgba);
  raster_ = std::make_shared<const Raster>(Raster{width, height, std::move(rgba), std::move(id)});
}

Image Image::filled(int width, int height, Rgba color) {
  return Canvas(width, height, color).freeze();
}

Rgba Image::at(int x, int y) const {
  const auto* p = raster_->rgba.data() + (static_cast<std::size_t>(y) * raster_->width + x) * 4;
  return {p[0], p[1], p[2], p[3]};
}

Canvas::Canvas(int width, int height, Rgba fill)
    : width_(std::max(width, 0)), height_(std::max(height, 0)) {
  rgba_.resize(static_cast<std::size_t>(width_) * height_ * 4);
  for (std::size_t i = 0; i < rgba_.size(); i += 4) {
    rgba_[i] = fill.r;
    rgba_[i + 1] = fill.g;
    rgba_[i + 2] = fill.b;
    rgba_[i + 3] = fill.a;
  }
}

Canvas::Canvas(const Image& source)
    : width_(source.width()), height_(source.height()), rgba_(source.bytes().begin(), source.bytes().end()) {}

Rgba Canvas::at(int x, int y) const {
  const auto* p = rgba_.data() + (static_cast<std::size_t>(y) * width_ + x) * 4;
  return {p[0], p[1], p[2], p[3]};
}

void Canvas::set(int x, int y, Rgba c) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
  auto* p = rgba_.data() + (static_cast<std::size_t>(y) * width_ + x) * 4;
  p[0] = c.r;
  p[1] = c.g;
  p[2] = c.b;
  p[3] = c.a;
}

// Source-over compositing with integer rounding; destination alpha is kept.
void Canvas::blend(int x, int y, Rgba c) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_ || c.a == 0) return;
  if (c.a == 255) {
    Rgba dst = at(x, y);
    set(x, y, {c.r, c.g, c.b, dst.a});
    return;
  }
  Rgba dst = at(x, y);
  auto mix = [&](std::uint8_t s, std::uint8_t d) {
    return static_cast<std::uint8_t>((s * c.a + d * (255 - c.a) + 127) / 255);
  };
  set(x, y, {mix(c.r, dst.r), mix(c.g, dst.g), mix(c.b, dst.b), dst.a});
}

void Canvas::fill_rect(const PixelRect& rect, Rgba color) {
  for (int y = std::max(rect.y0, 0); y < std::min(rect.y1, height_); ++y) {
    for (int x = std::max(rect.x0, 0); x < std::min(rect.x1, width_); ++x) set(x, y, color);
  }
}

Image Canvas::freeze() const { return Image(width_, height_, rgba_); }

Mask::Mask(int width, int height, std::vector<std::uint8_t> bits) : width_(width), height_(height) {
  if (width < 1 || height < 1 || bits.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::InvalidImage, "mask buffer does not match dimensions",
                {{"width", width}, {"height", height}, {"bits", bits.size()}});
  }
  for (auto& b : bits) b = b ? 1 : 0;
  bits_ = std::make_shared<const std::vector<std::uint8_t>>(std::move(bits));
}

Mask Mask::empty(int width, int height) {
  return Mask(width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), 0));
}

Mask Mask::from_rect(int width, int height, const PixelRect& rect) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), 0);
  for (int y = std::max(rect.y0, 0); y < std::min(rect.y1, height); ++y) {
    for (int x = std::max(rect.x0, 0); x < std::min(rect.x1, width); ++x) bits[static_cast<std::size_t>(y) * width + x] = 1;
  }
  return Mask(width, height, std::move(bits));
}

std::size_t Mask::count() const { return static_cast<std::size_t>(std::count(bits_->begin(), bits_->end(), 1)); }

std::optional<PixelRect> Mask::extent() const {
  PixelRect r{width_, height_, -1, -1};
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (!at(x, y)) continue;
      r.x0 = std::min(r.x0, x);
      r.y0 = std::min(r.y0, y);
      r.x1 = std::max(r.x1, x + 1);
      r.y1 = std::max(r.y1, y + 1);
    }
  }
  if (r.x1 < 0) return std::nullopt;
  return r;
}

Mask Mask::united(const Mask& other) const {
  if (other.width_ != width_ || other.height_ != height_) {
    throw Error(ErrorCode::InvalidArgument, "cannot unite masks of different dimensions");
  }
  std::vector<std::uint8_t> bits(*bits_);
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] |= (*other.bits_)[i];
  return Mask(width_, height_, std::move(bits));
}

}  // namespace vistep
