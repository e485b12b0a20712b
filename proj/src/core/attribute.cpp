#include "core/attribute.hpp"

#include "core/image_io.hpp"

namespace ekey {

Bitmap transpose(const Bitmap& image) {
  Bitmap out(image.height, image.width, image.channels);
  for (std::uint32_t y = 0; y < image.height; ++y) {
    for (std::uint32_t x = 0; x < image.width; ++x) {
      for (std::uint32_t c = 0; c < image.channels; ++c) out.at(y, x, c) = image.at(x, y, c);
    }
  }
  return out;
}

const char* label_name(Label label) noexcept {
  switch (label) {
    case Label::Positive: return "positive";
    case Label::Negative: return "negative";
    case Label::Unlabeled: return "unlabeled";
  }
  return "?";
}

Label parse_label(std::string_view text) {
  if (text == "positive" || text == "pos" || text == "+") return Label::Positive;
  if (text == "negative" || text == "neg" || text == "-") return Label::Negative;
  if (text == "unlabeled" || text == "?") return Label::Unlabeled;
  throw Error(ErrorCode::InvalidInput, "unknown label '" + std::string(text) + "'");
}

SampleKind parse_sample_kind(std::string_view text) {
  if (text == "text") return SampleKind::Text;
  if (text == "file") return SampleKind::File;
  if (text == "image") return SampleKind::Image;
  throw Error(ErrorCode::InvalidInput, "unknown sample kind '" + std::string(text) + "'");
}

AttributeSample AttributeSample::text(std::string_view utf8, Label label, std::string source_id) {
  AttributeSample s;
  s.kind = SampleKind::Text;
  s.bytes.assign(utf8.begin(), utf8.end());
  s.label = label;
  s.source_id = std::move(source_id);
  return s;
}

AttributeSample AttributeSample::file(std::vector<std::uint8_t> bytes, Label label,
                                      std::string source_id) {
  if (bytes.empty()) throw Error(ErrorCode::InvalidInput, "file sample must not be empty");
  AttributeSample s;
  s.kind = SampleKind::File;
  s.bytes = std::move(bytes);
  s.label = label;
  s.source_id = std::move(source_id);
  return s;
}

AttributeSample AttributeSample::from_image(Bitmap image, Label label, std::string source_id) {
  image.validate();
  AttributeSample s;
  s.kind = SampleKind::Image;
  s.bytes = encode_pnm(image);
  s.image = std::move(image);
  s.label = label;
  s.source_id = std::move(source_id);
  return s;
}

}  // namespace ekey
