#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bdnn/network.hpp"

namespace ekey::bdnn {

inline constexpr std::uint32_t kModelFormatVersion = 1;

// Model file, all integers little-endian:
//
//   "BDNN"                       4 octets
//   format version               u32 (= 1)
//   input channels/height/width  3 x u32
//   key layer index              u32
//   bucketizer threshold         f32
//   layer count                  u32
//   layer table, per layer       u8 type, 4 x u32 fields
//       Conv:    out_channels, kernel, stride, pad
//       Affine:  units, 0, 0, 0
//       Dropout: rate as f32 bit pattern, 0, 0, 0
//       others:  0, 0, 0, 0
//   parameters, per Conv/Affine  u32 weight count, f32 weights,
//                                u32 bias count, f32 biases
//   CRC-32 (zlib polynomial) of every preceding octet   u32
std::vector<std::uint8_t> serialize_model(const NetworkModel& model);
// Error{Checksum} for truncation or CRC mismatch, Error{Format} for a bad
// magic, unknown version or inconsistent layer table.
NetworkModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const NetworkModel& model, const std::filesystem::path& path);
NetworkModel load_model(const std::filesystem::path& path);

}  // namespace ekey::bdnn
