#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vistep/image.hpp"

namespace vistep::codec {

enum class ImageFormat { Png, Jpeg, Unknown };

ImageFormat sniff(std::span<const std::uint8_t> bytes);

/// Deterministic PNG encoding (fixed compression level, no ancillary chunks).
std::vector<std::uint8_t> encode_png(const Image& image);

/// Decodes PNG or JPEG into RGBA8. Throws Error{InvalidImage}.
Image decode_image(std::span<const std::uint8_t> bytes);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string png_data_uri(const Image& image);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);
void write_file(const std::string& path, std::string_view text);

Image load_image(const std::string& path);
void save_png(const std::string& path, const Image& image);

}  // namespace vistep::codec
