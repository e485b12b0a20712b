#include "core/image_io.hpp"

#include <png.h>
#include <zlib.h>

#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>

#include "core/error.hpp"

namespace ekey {

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

class PnmReader {
 public:
  explicit PnmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t next_uint() {
    skip_space_and_comments();
    std::size_t start = pos_;
    std::uint64_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 0xffffffu) fail("header value too large", start);
      ++pos_;
    }
    if (pos_ == start) fail("expected a decimal header field", start);
    return static_cast<std::uint32_t>(value);
  }

  // Exactly one whitespace octet separates the header from the raster.
  void end_header() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      fail("expected whitespace after header", pos_);
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  void seek(std::size_t p) { pos_ = p; }

  [[noreturn]] static void fail(const std::string& what, std::size_t offset) {
    throw Error(ErrorCode::Decode,
                "PNM decode error at offset " + std::to_string(offset) + ": " + what, offset);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

Bitmap decode_pnm(std::span<const std::uint8_t> bytes) {
  std::uint32_t channels = bytes[1] == '5' ? 1 : 3;
  PnmReader reader(bytes);
  reader.seek(2);
  std::uint32_t width = reader.next_uint();
  std::uint32_t height = reader.next_uint();
  std::size_t maxval_at = reader.pos();
  std::uint32_t maxval = reader.next_uint();
  if (maxval != 255) PnmReader::fail("only maxval 255 is supported", maxval_at);
  reader.end_header();
  if (width == 0 || height == 0) PnmReader::fail("zero image dimension", 2);
  std::size_t need = std::size_t{width} * height * channels;
  std::size_t start = reader.pos();
  if (bytes.size() - start < need) PnmReader::fail("raster truncated", bytes.size());
  std::vector<std::uint8_t> px(bytes.begin() + start, bytes.begin() + start + need);
  return Bitmap(width, height, channels, std::move(px));
}

std::uint32_t be32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} << 24 | std::uint32_t{p[1]} << 16 | std::uint32_t{p[2]} << 8 | p[3];
}

// Walks the chunk list so truncation and corruption are reported with the
// offset of the offending chunk rather than libpng's generic message.
void validate_png_chunks(std::span<const std::uint8_t> bytes) {
  auto fail = [](const std::string& what, std::size_t offset) {
    throw Error(ErrorCode::Decode,
                "PNG decode error at offset " + std::to_string(offset) + ": " + what, offset);
  };
  std::size_t pos = 8;
  while (true) {
    if (bytes.size() - pos < 12) fail("truncated chunk header", pos);
    std::uint32_t len = be32(bytes.data() + pos);
    if (len > 0x7fffffffu || bytes.size() - pos - 12 < len) fail("truncated chunk", pos);
    const std::uint8_t* type = bytes.data() + pos + 4;
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, type, static_cast<uInt>(len + 4));
    if (crc != be32(type + 4 + len)) fail("chunk CRC mismatch", pos);
    if (std::memcmp(type, "IEND", 4) == 0) return;
    pos += 12 + len;
  }
}

Bitmap decode_png(std::span<const std::uint8_t> bytes) {
  validate_png_chunks(bytes);
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::Decode, std::string("PNG decode error at offset 0: ") + image.message, 0);
  }
  std::uint32_t channels = (image.format & PNG_FORMAT_FLAG_COLOR) ? 3 : 1;
  image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> px(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, px.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::Decode, "PNG decode error at offset 8: " + msg, 8);
  }
  return Bitmap(image.width, image.height, channels, std::move(px));
}

}  // namespace

Bitmap decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return decode_pnm(bytes);
  }
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) {
    return decode_png(bytes);
  }
  throw Error(ErrorCode::Decode, "unrecognized image format at offset 0", 0);
}

Bitmap load_image(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  try {
    return decode_image(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what(), e.offset());
  }
}

std::vector<std::uint8_t> encode_pnm(const Bitmap& image) {
  image.validate();
  std::string header = (image.channels == 1 ? "P5\n" : "P6\n") + std::to_string(image.width) +
                       " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

std::vector<std::uint8_t> encode_png(const Bitmap& image) {
  image.validate();
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = image.width;
  png.height = image.height;
  png.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::Internal, std::string("PNG encode failed: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::Internal, std::string("PNG encode failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::Io, "error reading '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot create '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "error writing '" + path.string() + "'");
}

}  // namespace ekey
