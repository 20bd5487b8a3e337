#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vstitch/geometry.hpp"
#include "vstitch/image.hpp"

namespace vstitch {

enum class ImageFormat { kPng, kPpm };

// Decoding errors are kIo naming `origin` and the byte offset of the fault.
ImageU8 decode_image(std::span<const std::uint8_t> bytes, std::string_view origin = "<memory>");
std::vector<std::uint8_t> encode_image(const ImageU8& image, ImageFormat format);

ImageU8 read_image(const std::filesystem::path& path);
// Format from the extension (.png or .ppm); writes a sibling temporary and
// renames it into place.
void write_image(const std::filesystem::path& path, const ImageU8& image);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

// "x1 y1 x2 y2" per line, '#' comment lines. With nonzero extents, points
// outside [0, w) x [0, h) are rejected.
CorrespondenceSet parse_matches(std::string_view text, std::string_view origin = "matches",
                                int width = 0, int height = 0);
std::string format_matches(const CorrespondenceSet& matches);

// PNG and PPM files of a directory in lexicographic order. A regular file
// is a one-frame source. Throws kIo when missing or empty.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& source);

// Six-digit zero-padded frame file name.
std::string frame_name(std::size_t index, std::string_view extension = ".png");

}  // namespace vstitch
