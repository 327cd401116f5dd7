#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "obsdict/glyph.hpp"

namespace obsdict::image_io {

/// PNG (any colour type, composited on white) or binary PGM (P5), sniffed by magic.
GrayImage decode(std::span<const std::uint8_t> bytes);
GrayImage read(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const GrayImage& image);
std::vector<std::uint8_t> encode_pgm(const GrayImage& image);

/// Writes PNG or PGM depending on the extension (".pgm" -> PGM, else PNG).
void write(const std::filesystem::path& path, const GrayImage& image);

/// Reads an image and converts it to ink-positive form without normalizing.
/// Square inputs only; used for files the library itself wrote.
Glyph read_glyph(const std::filesystem::path& path);
void write_glyph(const std::filesystem::path& path, const Glyph& g);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace obsdict::image_io
