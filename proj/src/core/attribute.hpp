#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "core/error.hpp"

namespace ekey {

// Row-major, 8 bits per channel. channels is 1 (gray) or 3 (RGB).
struct Bitmap {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t channels = 1;
  std::vector<std::uint8_t> pixels;

  Bitmap() = default;
  Bitmap(std::uint32_t w, std::uint32_t h, std::uint32_t c, std::vector<std::uint8_t> px)
      : width(w), height(h), channels(c), pixels(std::move(px)) {
    validate();
  }
  Bitmap(std::uint32_t w, std::uint32_t h, std::uint32_t c, std::uint8_t fill = 0)
      : Bitmap(w, h, c, std::vector<std::uint8_t>(std::size_t{w} * h * c, fill)) {}

  void validate() const {
    if (channels != 1 && channels != 3) {
      throw Error(ErrorCode::Shape, "bitmap must have 1 or 3 channels");
    }
    if (pixels.size() != std::size_t{width} * height * channels) {
      throw Error(ErrorCode::Shape, "bitmap pixel count does not match dimensions");
    }
  }

  std::uint8_t& at(std::uint32_t x, std::uint32_t y, std::uint32_t c = 0) {
    return pixels[(std::size_t{y} * width + x) * channels + c];
  }
  std::uint8_t at(std::uint32_t x, std::uint32_t y, std::uint32_t c = 0) const {
    return pixels[(std::size_t{y} * width + x) * channels + c];
  }

  friend bool operator==(const Bitmap&, const Bitmap&) = default;
};

Bitmap transpose(const Bitmap& image);

enum class SampleKind : std::uint8_t { Text = 0, File = 1, Image = 2 };
enum class Label : std::uint8_t { Positive = 0, Negative = 1, Unlabeled = 2 };

const char* label_name(Label label) noexcept;
Label parse_label(std::string_view text);
SampleKind parse_sample_kind(std::string_view text);

// One candidate environment attribute. Text samples hold UTF-8 octets. The
// label is metadata for the evaluator; discriminators never look at it.
struct AttributeSample {
  SampleKind kind = SampleKind::Text;
  std::vector<std::uint8_t> bytes;
  Label label = Label::Unlabeled;
  std::string source_id;
  // Decoded pixels for Image samples; empty otherwise.
  Bitmap image;

  static AttributeSample text(std::string_view utf8, Label label = Label::Unlabeled,
                              std::string source_id = {});
  static AttributeSample file(std::vector<std::uint8_t> bytes, Label label = Label::Unlabeled,
                              std::string source_id = {});
  static AttributeSample from_image(Bitmap image, Label label = Label::Unlabeled,
                                    std::string source_id = {});

  std::string_view as_text() const {
    return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
  }
};

}  // namespace ekey
