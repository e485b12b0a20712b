#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "core/attribute.hpp"

namespace ekey::bdnn {

// A desk-scale two-class image set for the B-DNN demo. Positives are one
// target glyph (an oval "face" with two eyes and a mouth) under random shift,
// scale, brightness, contrast and pixel noise; negatives are assorted other
// scenes (bars, discs, rings, crosses, gradients, textures). 32x32 gray.
std::vector<AttributeSample> synthetic_shapes(std::uint32_t positives, std::uint32_t negatives,
                                              std::uint64_t seed);

// Writes every sample as a PGM under dir and a manifest.tsv that lists them;
// returns the manifest path.
std::filesystem::path write_synthetic_corpus(const std::filesystem::path& dir,
                                             std::uint32_t positives, std::uint32_t negatives,
                                             std::uint64_t seed);

}  // namespace ekey::bdnn
