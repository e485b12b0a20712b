#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "core/attribute.hpp"

namespace ekey {

// Decodes binary PGM (P5), binary PPM (P6) or PNG. Multi-byte or alpha PNGs are
// reduced to 8-bit gray or RGB by libpng. Malformed input raises
// Error{Decode} with the byte offset where decoding failed.
Bitmap decode_image(std::span<const std::uint8_t> bytes);
Bitmap load_image(const std::filesystem::path& path);

// P5 for gray bitmaps, P6 for RGB; maxval 255.
std::vector<std::uint8_t> encode_pnm(const Bitmap& image);
std::vector<std::uint8_t> encode_png(const Bitmap& image);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace ekey
