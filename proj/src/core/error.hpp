#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace ekey {

// Numeric values are part of the public contract: the C API returns them as
// ek_status and the CLI uses them as process exit codes.
enum class ErrorCode : int {
  Ok = 0,
  InvalidArgument = 1,
  Io = 2,
  InvalidInput = 3,
  KeyMismatch = 4,
  MacMismatch = 5,
  PadCorrupt = 6,
  Format = 7,
  Checksum = 8,
  Decode = 9,
  Shape = 10,
  Training = 11,
  DiscriminatorMismatch = 12,
  Unsupported = 13,
  Internal = 14,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> offset = std::nullopt)
      : std::runtime_error(message), code_(code), offset_(offset) {}

  ErrorCode code() const noexcept { return code_; }
  // Byte/character position of the first offending input element, if known.
  std::optional<std::size_t> offset() const noexcept { return offset_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> offset_;
};

}  // namespace ekey
