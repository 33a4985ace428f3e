#include "vistep/image_ops.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "vistep/codec.hpp"
#include "vistep/error.hpp"

#ifndef VISTEP_ASSET_DIR
#define VISTEP_ASSET_DIR "assets"
#endif

namespace vistep::ops {

namespace {

constexpr std::uint8_t kFont[95][kGlyphHeight] = {
#include "font_6x11.inc"
};

constexpr Rgba kPalette[] = {
    {230, 25, 75, 255},  {60, 180, 75, 255},  {0, 130, 200, 255}, {245, 130, 48, 255},
    {145, 30, 180, 255}, {70, 240, 240, 255}, {240, 50, 230, 255}, {128, 128, 0, 255},
};

Image extract(const Image& image, const PixelRect& r) {
  if (r.empty()) {
    throw Error(ErrorCode::EmptyCrop, "crop region has zero area",
                {{"rect", {r.x0, r.y0, r.x1, r.y1}}});
  }
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(r.width()) * r.height() * 4);
  const auto src = image.bytes();
  for (int y = r.y0; y < r.y1; ++y) {
    const auto* row = src.data() + (static_cast<std::size_t>(y) * image.width() + r.x0) * 4;
    out.insert(out.end(), row, row + static_cast<std::size_t>(r.width()) * 4);
  }
  return Image(r.width(), r.height(), std::move(out));
}

std::uint8_t luma(Rgba p) { return static_cast<std::uint8_t>((299 * p.r + 587 * p.g + 114 * p.b + 500) / 1000); }

std::string normalize_name(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == ' ' || c == '-') out += '_';
    else out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  auto b = out.find_first_not_of('_');
  auto e = out.find_last_not_of('_');
  if (b == std::string::npos) return {};
  return out.substr(b, e - b + 1);
}

// One pass of the edge-replicated box filter on the RGB channels.
std::vector<std::uint8_t> blur_pass(const std::vector<std::uint8_t>& src, int w, int h, int radius) {
  const int side = 2 * radius + 1;
  const int area = side * side;
  std::vector<std::uint32_t> horiz(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint32_t s[3] = {0, 0, 0};
      for (int dx = -radius; dx <= radius; ++dx) {
        int sx = std::clamp(x + dx, 0, w - 1);
        const auto* p = src.data() + (static_cast<std::size_t>(y) * w + sx) * 4;
        s[0] += p[0];
        s[1] += p[1];
        s[2] += p[2];
      }
      auto* hp = horiz.data() + (static_cast<std::size_t>(y) * w + x) * 3;
      hp[0] = s[0];
      hp[1] = s[1];
      hp[2] = s[2];
    }
  }
  std::vector<std::uint8_t> out(src);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint32_t s[3] = {0, 0, 0};
      for (int dy = -radius; dy <= radius; ++dy) {
        int sy = std::clamp(y + dy, 0, h - 1);
        const auto* hp = horiz.data() + (static_cast<std::size_t>(sy) * w + x) * 3;
        s[0] += hp[0];
        s[1] += hp[1];
        s[2] += hp[2];
      }
      auto* p = out.data() + (static_cast<std::size_t>(y) * w + x) * 4;
      for (int c = 0; c < 3; ++c) p[c] = static_cast<std::uint8_t>((s[c] + area / 2) / area);
    }
  }
  return out;
}

void require_masks(const ObjectList& objects, std::string_view op) {
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (!objects[i].mask) {
      throw Error(ErrorCode::MissingMask, std::string(op) + " needs a mask on every region; region " +
                                              std::to_string(i) + " has none",
                  {{"region", i}});
    }
  }
}

}  // namespace

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::None: return "none";
    case Relation::Left: return "left";
    case Relation::Right: return "right";
    case Relation::Above: return "above";
    case Relation::Below: return "below";
    case Relation::FrontOf: return "frontof";
    case Relation::Behind: return "behind";
  }
  return "none";
}

Image crop_spatial(const Image& image, const Box& box, Relation relation) {
  const int w = image.width();
  const int h = image.height();
  const PixelRect r = to_pixels(box.clamped(w, h), w, h);
  PixelRect out;
  switch (relation) {
    case Relation::None:
    case Relation::FrontOf:
    case Relation::Behind: out = r; break;
    case Relation::Left: out = {0, 0, r.x0, h}; break;
    case Relation::Right: out = {r.x1, 0, w, h}; break;
    case Relation::Above: out = {0, 0, w, r.y0}; break;
    case Relation::Below: out = {0, r.y1, w, h}; break;
  }
  return extract(image, out);
}

Rgba palette_color(std::size_t index) { return kPalette[index % std::size(kPalette)]; }

void draw_text(Canvas& canvas, int x, int y, std::string_view text, Rgba color) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (c < 0x20 || c > 0x7e) c = '?';
    const auto& glyph = kFont[c - 0x20];
    const int gx = x + static_cast<int>(i) * kGlyphWidth;
    for (int row = 0; row < kGlyphHeight; ++row) {
      for (int col = 0; col < kGlyphWidth; ++col) {
        if (glyph[row] & (1u << (kGlyphWidth - 1 - col))) canvas.set(gx + col, y + row, color);
      }
    }
  }
}

void draw_outline(Canvas& canvas, const PixelRect& rect, Rgba color, int stroke) {
  if (rect.empty()) return;
  for (int y = rect.y0; y < rect.y1; ++y) {
    for (int x = rect.x0; x < rect.x1; ++x) {
      bool edge = x < rect.x0 + stroke || x >= rect.x1 - stroke || y < rect.y0 + stroke || y >= rect.y1 - stroke;
      if (edge) canvas.set(x, y, color);
    }
  }
}

PixelRect label_rect(const PixelRect& rect, std::string_view text, int width, int height) {
  const int band_h = kGlyphHeight + 2 * kLabelPad;
  const int band_w = static_cast<int>(text.size()) * kGlyphWidth + 2 * kLabelPad;
  int y0 = rect.y0 - band_h >= 0 ? rect.y0 - band_h : rect.y0;
  const int x0 = std::max(0, std::min(rect.x0, width - band_w));
  PixelRect band{x0, y0, x0 + band_w, y0 + band_h};
  band.x0 = std::clamp(band.x0, 0, width);
  band.x1 = std::clamp(band.x1, 0, width);
  band.y0 = std::clamp(band.y0, 0, height);
  band.y1 = std::clamp(band.y1, 0, height);
  return band;
}

void draw_label(Canvas& canvas, const PixelRect& rect, std::string_view text, Rgba color) {
  const PixelRect band = label_rect(rect, text, canvas.width(), canvas.height());
  if (band.empty()) return;
  canvas.fill_rect(band, color);
  const int lum = luma(color);
  const Rgba ink = lum > 140 ? Rgba{0, 0, 0, 255} : Rgba{255, 255, 255, 255};
  // draw_text clips at the canvas edge, but must not spill outside the band.
  Canvas scratch(band.width(), band.height(), {0, 0, 0, 0});
  draw_text(scratch, kLabelPad, kLabelPad, text, ink);
  for (int y = 0; y < band.height(); ++y) {
    for (int x = 0; x < band.width(); ++x) {
      if (scratch.at(x, y).a) canvas.set(band.x0 + x, band.y0 + y, ink);
    }
  }
}

Image tag(const Image& image, const ObjectList& objects) {
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (!objects[i].label()) {
      throw Error(ErrorCode::UntaggedRegion, "region " + std::to_string(i) + " has neither a tag nor a category",
                  {{"region", i}});
    }
  }
  if (objects.empty()) return image;
  Canvas canvas(image);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const PixelRect r = to_pixels(objects[i].box.clamped(image.width(), image.height()), image.width(), image.height());
    const Rgba color = palette_color(i);
    draw_outline(canvas, r, color);
    draw_label(canvas, r, *objects[i].label(), color);
  }
  return canvas.freeze();
}

Mask union_mask(const ObjectList& objects, int width, int height) {
  require_masks(objects, "this operation");
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(width) * height, 0);
  for (const auto& o : objects) {
    const Mask& m = *o.mask;
    if (m.width() != width || m.height() != height) {
      throw Error(ErrorCode::InvalidArgument, "mask dimensions do not match the image",
                  {{"mask", {m.width(), m.height()}}, {"image", {width, height}}});
    }
    const auto src = m.bits();
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] |= src[i];
  }
  return Mask(width, height, std::move(bits));
}

Image color_pop(const Image& image, const ObjectList& objects) {
  require_masks(objects, "COLORPOP");
  const Mask keep = union_mask(objects, image.width(), image.height());
  Canvas canvas(image);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (keep.at(x, y)) continue;
      Rgba p = canvas.at(x, y);
      const std::uint8_t g = luma(p);
      canvas.set(x, y, {g, g, g, p.a});
    }
  }
  return canvas.freeze();
}

Image box_blur(const Image& image, int radius, int passes) {
  std::vector<std::uint8_t> data(image.bytes().begin(), image.bytes().end());
  for (int i = 0; i < passes; ++i) data = blur_pass(data, image.width(), image.height(), radius);
  return Image(image.width(), image.height(), std::move(data));
}

Image background_blur(const Image& image, const ObjectList& objects) {
  require_masks(objects, "BGBLUR");
  const Mask keep = union_mask(objects, image.width(), image.height());
  const Image blurred = box_blur(image);
  Canvas canvas(image);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (!keep.at(x, y)) canvas.set(x, y, blurred.at(x, y));
    }
  }
  return canvas.freeze();
}

EmojiTable EmojiTable::load(const std::string& dir) {
  const auto index_path = std::filesystem::path(dir) / "emoji.json";
  const auto raw = codec::read_file(index_path.string());
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(raw.begin(), raw.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidDocument, "malformed emoji table: " + std::string(e.what()));
  }
  EmojiTable table;
  for (const auto& entry : index.at("emoji")) {
    auto glyph = codec::load_image((std::filesystem::path(dir) / entry.at("file").get<std::string>()).string());
    table.add(entry.at("name").get<std::string>(), std::move(glyph),
              entry.value("aliases", std::vector<std::string>{}));
  }
  return table;
}

const EmojiTable& EmojiTable::builtin() {
  static const EmojiTable table = load(std::string(VISTEP_ASSET_DIR) + "/emoji");
  return table;
}

void EmojiTable::add(std::string name, Image glyph, std::vector<std::string> aliases) {
  auto key = normalize_name(name);
  for (const auto& a : aliases) aliases_[normalize_name(a)] = key;
  glyphs_.insert_or_assign(std::move(key), std::move(glyph));
}

const Image* EmojiTable::find(std::string_view name) const {
  auto key = normalize_name(name);
  if (auto it = aliases_.find(key); it != aliases_.end()) key = it->second;
  auto it = glyphs_.find(key);
  return it == glyphs_.end() ? nullptr : &it->second;
}

std::vector<std::string> EmojiTable::names() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : glyphs_) out.push_back(k);
  return out;
}

Image emoji(const Image& image, const ObjectList& objects, std::string_view name, const EmojiTable& table) {
  const Image* glyph = table.find(name);
  if (!glyph) {
    std::string list;
    for (const auto& n : table.names()) list += (list.empty() ? "" : ", ") + n;
    throw Error(ErrorCode::UnknownEmoji, "unknown emoji '" + std::string(name) + "'; available: " + list,
                {{"name", name}, {"available", table.names()}});
  }
  if (objects.empty()) return image;
  Canvas canvas(image);
  for (const auto& o : objects) {
    const PixelRect r = to_pixels(o.box.clamped(image.width(), image.height()), image.width(), image.height());
    if (r.empty()) continue;
    for (int y = 0; y < r.height(); ++y) {
      const int gy = std::min(glyph->height() - 1, static_cast<int>((static_cast<long long>(y) * 2 + 1) * glyph->height() / (2LL * r.height())));
      for (int x = 0; x < r.width(); ++x) {
        const int gx = std::min(glyph->width() - 1, static_cast<int>((static_cast<long long>(x) * 2 + 1) * glyph->width() / (2LL * r.width())));
        canvas.blend(r.x0 + x, r.y0 + y, glyph->at(gx, gy));
      }
    }
  }
  return canvas.freeze();
}

Image thumbnail(const Image& image, int max_side) {
  const int longest = std::max(image.width(), image.height());
  if (longest <= max_side) return image;
  const int w = std::max(1, static_cast<int>(static_cast<long long>(image.width()) * max_side / longest));
  const int h = std::max(1, static_cast<int>(static_cast<long long>(image.height()) * max_side / longest));
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(w) * h * 4);
  for (int y = 0; y < h; ++y) {
    const int sy = static_cast<int>((static_cast<long long>(y) * 2 + 1) * image.height() / (2LL * h));
    for (int x = 0; x < w; ++x) {
      const int sx = static_cast<int>((static_cast<long long>(x) * 2 + 1) * image.width() / (2LL * w));
      const Rgba p = image.at(sx, sy);
      out.insert(out.end(), {p.r, p.g, p.b, p.a});
    }
  }
  return Image(w, h, std::move(out));
}

}  // namespace vistep::ops
