#include "bdnn/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "core/error.hpp"
#include "core/image_io.hpp"
#include "core/random.hpp"

namespace ekey::bdnn {

namespace {

constexpr int kSide = 32;

using Canvas = std::array<double, kSide * kSide>;

void fill_ellipse(Canvas& c, double cx, double cy, double rx, double ry, double value) {
  for (int y = 0; y < kSide; ++y) {
    for (int x = 0; x < kSide; ++x) {
      const double dx = (x + 0.5 - cx) / rx;
      const double dy = (y + 0.5 - cy) / ry;
      if (dx * dx + dy * dy <= 1.0) c[y * kSide + x] = value;
    }
  }
}

void fill_rect(Canvas& c, double x0, double y0, double x1, double y1, double value) {
  for (int y = 0; y < kSide; ++y)
    for (int x = 0; x < kSide; ++x)
      if (x + 0.5 >= x0 && x + 0.5 <= x1 && y + 0.5 >= y0 && y + 0.5 <= y1) c[y * kSide + x] = value;
}

void draw_face(Canvas& c, Rng& rng) {
  const double s = rng.uniform(0.9, 1.1);
  const double cx = 16.0 + rng.uniform(-2.0, 2.0);
  const double cy = 16.0 + rng.uniform(-2.0, 2.0);
  const double skin = rng.uniform(0.75, 0.95);
  const double dark = rng.uniform(0.05, 0.2);
  fill_ellipse(c, cx, cy, 10.0 * s, 13.0 * s, skin);
  fill_ellipse(c, cx - 4.5 * s, cy - 3.5 * s, 2.0 * s, 2.0 * s, dark);
  fill_ellipse(c, cx + 4.5 * s, cy - 3.5 * s, 2.0 * s, 2.0 * s, dark);
  fill_rect(c, cx - 5.0 * s, cy + 5.0 * s, cx + 5.0 * s, cy + 7.0 * s, dark);
}

void draw_negative(Canvas& c, Rng& rng) {
  const double fg = rng.uniform(0.55, 0.95);
  switch (rng.below(6)) {
    case 0: {  // vertical or horizontal bars
      const bool vertical = rng.below(2) == 0;
      const double period = rng.uniform(5.0, 9.0);
      const double phase = rng.uniform(0.0, period);
      for (int y = 0; y < kSide; ++y)
        for (int x = 0; x < kSide; ++x) {
          const double t = std::fmod((vertical ? x : y) + phase, period);
          if (t < period / 2) c[y * kSide + x] = fg;
        }
      break;
    }
    case 1: {  // scattered discs
      const auto n = 2 + rng.below(4);
      for (std::uint64_t i = 0; i < n; ++i) {
        const double r = rng.uniform(2.5, 6.0);
        fill_ellipse(c, rng.uniform(4, 28), rng.uniform(4, 28), r, r, fg);
      }
      break;
    }
    case 2: {  // ring
      const double r = rng.uniform(8.0, 13.0);
      const double cx = 16 + rng.uniform(-3, 3);
      const double cy = 16 + rng.uniform(-3, 3);
      fill_ellipse(c, cx, cy, r, r, fg);
      fill_ellipse(c, cx, cy, r - rng.uniform(2.5, 4.0), r - 3.0, 0.1);
      break;
    }
    case 3: {  // cross
      const double cx = 16 + rng.uniform(-4, 4);
      const double cy = 16 + rng.uniform(-4, 4);
      const double w = rng.uniform(2.0, 4.0);
      fill_rect(c, cx - w, 2, cx + w, 30, fg);
      fill_rect(c, 2, cy - w, 30, cy + w, fg);
      break;
    }
    case 4: {  // linear gradient
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (int y = 0; y < kSide; ++y)
        for (int x = 0; x < kSide; ++x) {
          const double t = ((x - 16) * std::cos(angle) + (y - 16) * std::sin(angle)) / 32.0 + 0.5;
          c[y * kSide + x] = std::clamp(t, 0.0, 1.0) * fg;
        }
      break;
    }
    default: {  // rectangles
      const auto n = 1 + rng.below(3);
      for (std::uint64_t i = 0; i < n; ++i) {
        const double x0 = rng.uniform(0, 22);
        const double y0 = rng.uniform(0, 22);
        fill_rect(c, x0, y0, x0 + rng.uniform(6, 14), y0 + rng.uniform(6, 14), fg);
      }
      break;
    }
  }
}

Bitmap render(const Canvas& c, Rng& rng) {
  const double contrast = rng.uniform(0.8, 1.2);
  const double offset = rng.uniform(-0.08, 0.08);
  Bitmap img(kSide, kSide, 1);
  for (int i = 0; i < kSide * kSide; ++i) {
    const double v = (c[i] - 0.5) * contrast + 0.5 + offset + rng.normal() * 0.03;
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  }
  return img;
}

std::string sample_name(const char* prefix, std::uint32_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04u.pgm", prefix, i);
  return buf;
}

}  // namespace

std::vector<AttributeSample> synthetic_shapes(std::uint32_t positives, std::uint32_t negatives,
                                              std::uint64_t seed) {
  Rng rng(seed);
  std::vector<AttributeSample> out;
  out.reserve(positives + negatives);
  for (std::uint32_t i = 0; i < positives; ++i) {
    Canvas c;
    c.fill(rng.uniform(0.1, 0.3));
    draw_face(c, rng);
    out.push_back(AttributeSample::from_image(render(c, rng), Label::Positive, sample_name("pos", i)));
  }
  for (std::uint32_t i = 0; i < negatives; ++i) {
    Canvas c;
    c.fill(rng.uniform(0.1, 0.3));
    draw_negative(c, rng);
    out.push_back(AttributeSample::from_image(render(c, rng), Label::Negative, sample_name("neg", i)));
  }
  return out;
}

std::filesystem::path write_synthetic_corpus(const std::filesystem::path& dir,
                                             std::uint32_t positives, std::uint32_t negatives,
                                             std::uint64_t seed) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create '" + dir.string() + "': " + ec.message());
  const auto samples = synthetic_shapes(positives, negatives, seed);
  const auto manifest = dir / "manifest.tsv";
  std::ofstream out(manifest, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot create '" + manifest.string() + "'");
  out << "#ekey-manifest 1\n#seed " << seed << "\n#kind image\n";
  for (const auto& s : samples) {
    write_file(dir / s.source_id, s.bytes);
    out << label_name(s.label) << '\t' << s.source_id << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "error writing '" + manifest.string() + "'");
  return manifest;
}

}  // namespace ekey::bdnn
