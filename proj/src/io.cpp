#include "vstitch/io.hpp"

#include <png.h>
#include <zlib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "vstitch/error.hpp"

namespace vstitch {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::uint8_t, 8> kPngSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

[[noreturn]] void io_fail(std::string_view origin, std::size_t offset, const std::string& what) {
  throw Error(ErrorCode::kIo, std::string(origin) + ": byte " + std::to_string(offset) + ": " + what);
}

std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) | p[3];
}

// Walks the chunk list so structural damage is reported at its offset
// before libpng sees the stream.
void check_png_chunks(std::span<const std::uint8_t> bytes, std::string_view origin) {
  std::size_t pos = kPngSignature.size();
  bool seen_end = false;
  while (!seen_end) {
    if (pos + 12 > bytes.size()) io_fail(origin, pos, "truncated PNG chunk header");
    const std::uint32_t len = be32(bytes.data() + pos);
    if (len > 0x7fffffffu || pos + 12 + len > bytes.size()) io_fail(origin, pos, "PNG chunk overruns the file");
    const std::uint8_t* type = bytes.data() + pos + 4;
    const auto crc = static_cast<std::uint32_t>(crc32(0L, type, len + 4));
    if (crc != be32(type + 4 + len)) io_fail(origin, pos, "PNG chunk CRC mismatch");
    seen_end = std::memcmp(type, "IEND", 4) == 0;
    pos += 12 + len;
  }
}

ImageU8 decode_png(std::span<const std::uint8_t> bytes, std::string_view origin) {
  check_png_chunks(bytes, origin);
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    io_fail(origin, kPngSignature.size(), img.message);
  }
  img.format = PNG_FORMAT_RGB;
  ImageU8 out(static_cast<int>(img.width), static_cast<int>(img.height), 3);
  if (!png_image_finish_read(&img, nullptr, out.data().data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    io_fail(origin, kPngSignature.size(), msg);
  }
  return out;
}

ImageU8 decode_ppm(std::span<const std::uint8_t> bytes, std::string_view origin) {
  std::size_t pos = 2;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&](const char* what) {
    skip_space();
    const std::size_t start = pos;
    long v = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1 << 24) io_fail(origin, start, std::string("PPM ") + what + " too large");
      ++pos;
    }
    if (pos == start) io_fail(origin, start, std::string("expected PPM ") + what);
    return static_cast<int>(v);
  };
  const int w = number("width");
  const int h = number("height");
  const std::size_t maxval_at = pos;
  const int maxval = number("maxval");
  if (w <= 0 || h <= 0) io_fail(origin, maxval_at, "PPM dimensions must be positive");
  if (maxval != 255) io_fail(origin, maxval_at, "only 8-bit PPM (maxval 255) is supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) io_fail(origin, pos, "expected whitespace after PPM header");
  ++pos;
  const std::size_t need = static_cast<std::size_t>(w) * h * 3;
  if (bytes.size() - pos < need) io_fail(origin, bytes.size(), "PPM pixel data truncated");
  ImageU8 out(w, h, 3);
  std::copy_n(bytes.data() + pos, need, out.data().data());
  return out;
}

ImageU8 as_rgb(const ImageU8& image) {
  if (image.channels() == 3) return image;
  ImageU8 out(image.width(), image.height(), 3);
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = image.at(x, y, std::min(c, image.channels() - 1));
  return out;
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, path.string() + ": cannot open for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string lower(std::string s) {
  std::ranges::transform(s, s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

ImageU8 decode_image(std::span<const std::uint8_t> bytes, std::string_view origin) {
  if (bytes.size() >= kPngSignature.size() && std::equal(kPngSignature.begin(), kPngSignature.end(), bytes.begin())) {
    return decode_png(bytes, origin);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes, origin);
  io_fail(origin, 0, "not a PNG or binary PPM file");
}

std::vector<std::uint8_t> encode_image(const ImageU8& image, ImageFormat format) {
  const ImageU8 rgb = as_rgb(image);
  if (format == ImageFormat::kPpm) {
    const std::string header = "P6\n" + std::to_string(rgb.width()) + " " + std::to_string(rgb.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), rgb.data().begin(), rgb.data().end());
    return out;
  }
  if (rgb.empty()) throw Error(ErrorCode::kParameter, "cannot encode an empty image");
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(rgb.width());
  img.height = static_cast<png_uint_32>(rgb.height());
  img.format = PNG_FORMAT_RGB;
  img.flags = PNG_IMAGE_FLAG_FAST;
  png_alloc_size_t size = PNG_IMAGE_PNG_SIZE_MAX(img);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, rgb.data().data(), 0, nullptr)) {
    throw Error(ErrorCode::kIo, std::string("PNG encoding failed: ") + img.message);
  }
  out.resize(size);
  return out;
}

ImageU8 read_image(const fs::path& path) {
  const auto bytes = read_bytes(path);
  return decode_image(bytes, path.string());
}

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, tmp.string() + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorCode::kIo, tmp.string() + ": write failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::kIo, path.string() + ": cannot move into place");
  }
}

void write_image(const fs::path& path, const ImageU8& image) {
  const std::string ext = lower(path.extension().string());
  ImageFormat format;
  if (ext == ".png") {
    format = ImageFormat::kPng;
  } else if (ext == ".ppm") {
    format = ImageFormat::kPpm;
  } else {
    throw Error(ErrorCode::kIo, path.string() + ": unsupported image extension");
  }
  write_bytes(path, encode_image(image, format));
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_bytes(path);
  return {bytes.begin(), bytes.end()};
}

void write_text(const fs::path& path, std::string_view text) {
  write_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

CorrespondenceSet parse_matches(std::string_view text, std::string_view origin, int width, int height) {
  CorrespondenceSet out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t line_start = pos;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') continue;

    double v[4];
    std::size_t p = first;
    for (int k = 0; k < 4; ++k) {
      while (p < line.size() && (line[p] == ' ' || line[p] == '\t')) ++p;
      const auto [ptr, ec] = std::from_chars(line.data() + p, line.data() + line.size(), v[k]);
      if (ec != std::errc() || !std::isfinite(v[k])) {
        io_fail(origin, line_start + p, "expected four coordinates");
      }
      p = static_cast<std::size_t>(ptr - line.data());
    }
    while (p < line.size() && (line[p] == ' ' || line[p] == '\t')) ++p;
    if (p != line.size()) io_fail(origin, line_start + p, "trailing characters after four coordinates");
    if (width > 0 && height > 0) {
      auto outside = [&](double x, double y) { return x < 0 || y < 0 || x >= width || y >= height; };
      if (outside(v[0], v[1]) || outside(v[2], v[3])) io_fail(origin, line_start, "match outside the image extent");
    }
    out.push_back({{v[0], v[1]}, {v[2], v[3]}});
  }
  return out;
}

std::string format_matches(const CorrespondenceSet& matches) {
  std::ostringstream out;
  out.precision(17);
  for (const Correspondence& c : matches) {
    out << c.src.x << ' ' << c.src.y << ' ' << c.dst.x << ' ' << c.dst.y << '\n';
  }
  return out.str();
}

std::vector<fs::path> list_frames(const fs::path& source) {
  std::error_code ec;
  if (fs::is_regular_file(source, ec)) return {source};
  if (!fs::is_directory(source, ec)) throw Error(ErrorCode::kIo, source.string() + ": no such frame directory");
  std::vector<fs::path> frames;
  for (const auto& entry : fs::directory_iterator(source)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = lower(entry.path().extension().string());
    if (ext == ".png" || ext == ".ppm") frames.push_back(entry.path());
  }
  if (frames.empty()) throw Error(ErrorCode::kIo, source.string() + ": no PNG or PPM frames");
  std::ranges::sort(frames, [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  return frames;
}

std::string frame_name(std::size_t index, std::string_view extension) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return std::string(buf) + std::string(extension);
}

}  // namespace vstitch
