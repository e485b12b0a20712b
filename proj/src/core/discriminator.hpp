#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include "core/attribute.hpp"
#include "core/key_material.hpp"

namespace ekey {

// Maps an attribute sample to a possibleKey. Every well-formed sample yields a
// key; a non-target sample simply yields a wrong one. Implementations are
// immutable after construction and safe to call from several threads.
class Discriminator {
 public:
  virtual ~Discriminator() = default;

  virtual DiscriminatorId id() const noexcept = 0;
  virtual std::size_t key_width() const noexcept = 0;
  virtual SampleKind input_kind() const noexcept = 0;
  virtual KeyMaterial derive(const AttributeSample& sample) const = 0;
  virtual std::string describe() const = 0;
};

}  // namespace ekey
