#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace neurovm {

enum class ResourceClass : std::uint8_t { Lut, Memory, Io, Dsp };

inline constexpr std::array<ResourceClass, 4> kResourceClasses{
    ResourceClass::Lut, ResourceClass::Memory, ResourceClass::Io, ResourceClass::Dsp};

std::string_view to_string(ResourceClass c);

/// Counted capacity or footprint over the four fabric resource classes.
struct ResourceVector {
  std::int64_t lut = 0;
  std::int64_t memory_bytes = 0;
  std::int64_t io_pins = 0;
  std::int64_t dsp = 0;

  constexpr std::int64_t operator[](ResourceClass c) const {
    switch (c) {
      case ResourceClass::Lut: return lut;
      case ResourceClass::Memory: return memory_bytes;
      case ResourceClass::Io: return io_pins;
      case ResourceClass::Dsp: return dsp;
    }
    return 0;
  }

  constexpr bool fits_within(const ResourceVector& o) const {
    return lut <= o.lut && memory_bytes <= o.memory_bytes && io_pins <= o.io_pins && dsp <= o.dsp;
  }
  constexpr bool non_negative() const {
    return lut >= 0 && memory_bytes >= 0 && io_pins >= 0 && dsp >= 0;
  }
  constexpr bool any_positive() const {
    return lut > 0 || memory_bytes > 0 || io_pins > 0 || dsp > 0;
  }
  /// First class in which `*this` exceeds `available`, if any.
  std::optional<ResourceClass> first_deficit(const ResourceVector& available) const;

  /// Componentwise floor(v * num / den).
  ResourceVector scaled(std::int64_t num, std::int64_t den) const;
  /// Componentwise floor(v * fraction).
  ResourceVector fraction(double f) const;

  constexpr bool operator==(const ResourceVector&) const = default;

  constexpr ResourceVector& operator+=(const ResourceVector& o) {
    lut += o.lut;
    memory_bytes += o.memory_bytes;
    io_pins += o.io_pins;
    dsp += o.dsp;
    return *this;
  }
  constexpr ResourceVector& operator-=(const ResourceVector& o) {
    lut -= o.lut;
    memory_bytes -= o.memory_bytes;
    io_pins -= o.io_pins;
    dsp -= o.dsp;
    return *this;
  }
  friend constexpr ResourceVector operator+(ResourceVector a, const ResourceVector& b) {
    return a += b;
  }
  friend constexpr ResourceVector operator-(ResourceVector a, const ResourceVector& b) {
    return a -= b;
  }
  friend constexpr ResourceVector operator*(std::int64_t k, const ResourceVector& v) {
    return {k * v.lut, k * v.memory_bytes, k * v.io_pins, k * v.dsp};
  }
};

std::string to_string(const ResourceVector& v);

}  // namespace neurovm
