#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vistep/value.hpp"

namespace vistep::ops {

enum class Relation { None, Left, Right, Above, Below, FrontOf, Behind };

std::string_view to_string(Relation r);

/// Sub-image selected by `relation` relative to `box`:
///   none/frontof/behind -> the box itself
///   left  -> x in [0, x1), full height      right -> x in [x2, W), full height
///   above -> y in [0, y1), full width       below -> y in [y2, H), full width
/// Box coordinates are clamped to the image and rounded to whole pixels.
/// Throws EmptyCrop when the region has no area.
Image crop_spatial(const Image& image, const Box& box, Relation relation);

/// Outlines each region and draws its tag (or category) above it.
/// Throws UntaggedRegion.
Image tag(const Image& image, const ObjectList& objects);

/// Pixels outside the union of masks become (Y,Y,Y) with
/// Y = round(0.299R + 0.587G + 0.114B); alpha is preserved. Throws MissingMask.
Image color_pop(const Image& image, const ObjectList& objects);

constexpr int kBlurRadius = 5;
constexpr int kBlurPasses = 2;

/// Box blur of the whole image (edge-replicated window of side 2r+1,
/// rounded mean), applied `passes` times. Alpha is left unchanged.
Image box_blur(const Image& image, int radius = kBlurRadius, int passes = kBlurPasses);

/// Outside-mask pixels replaced by box_blur of the image. Throws MissingMask.
Image background_blur(const Image& image, const ObjectList& objects);

/// Named glyph rasters, loaded from `<dir>/emoji.json`.
class EmojiTable {
 public:
  static EmojiTable load(const std::string& dir);
  /// Table shipped in the project's assets directory.
  static const EmojiTable& builtin();

  void add(std::string name, Image glyph, std::vector<std::string> aliases = {});

  /// Matches names and aliases case-insensitively; spaces count as '_'.
  const Image* find(std::string_view name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, Image> glyphs_;
  std::map<std::string, std::string> aliases_;
};

/// Scales the glyph to each region's box (nearest neighbour) and
/// alpha-composites it. Throws UnknownEmoji listing the available names.
Image emoji(const Image& image, const ObjectList& objects, std::string_view name, const EmojiTable& table);

/// Union of all region masks. Throws MissingMask, InvalidArgument on size mismatch.
Mask union_mask(const ObjectList& objects, int width, int height);

// Drawing helpers shared with the rationale renderer.
constexpr int kGlyphWidth = 6;
constexpr int kGlyphHeight = 11;
constexpr int kLabelPad = 1;
constexpr int kStroke = 2;

Rgba palette_color(std::size_t index);
void draw_text(Canvas& canvas, int x, int y, std::string_view text, Rgba color);
void draw_outline(Canvas& canvas, const PixelRect& rect, Rgba color, int stroke = kStroke);
/// Rectangle occupied by a label for `rect`: above it when there is room,
/// otherwise along its top edge. Clipped to the canvas.
PixelRect label_rect(const PixelRect& rect, std::string_view text, int width, int height);
void draw_label(Canvas& canvas, const PixelRect& rect, std::string_view text, Rgba color);

/// Nearest-neighbour downscale so neither side exceeds `max_side`.
Image thumbnail(const Image& image, int max_side);

}  // namespace vistep::ops
