#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace geosmpc {

/// Two's-complement fixed-point layout: `total_bits` wide, `frac_bits` of
/// which sit below the binary point. Valid layouts satisfy
/// 0 < frac_bits < total_bits <= 64.
struct FixedPointFormat {
  std::uint8_t total_bits = 32;
  std::uint8_t frac_bits = 16;

  /// Throws RangeError for an invalid layout.
  void validate() const;

  /// Largest magnitude accepted by encode() is strictly below this.
  double encode_limit() const;

  /// Operands with |value| at or below this never wrap in fx_mul.
  double mul_safe_limit() const;

  friend bool operator==(const FixedPointFormat&, const FixedPointFormat&) = default;
};

inline constexpr FixedPointFormat kDefaultFormat{32, 16};

/// A value in some FixedPointFormat. `bits` holds the two's-complement
/// pattern sign-extended to 64 bits; the represented value is
/// bits / 2^frac_bits.
struct FixedWord {
  std::int64_t bits = 0;

  friend bool operator==(const FixedWord&, const FixedWord&) = default;
};

/// Round-to-nearest-even of v * 2^frac_bits. Throws RangeError when
/// |v| >= 2^(total_bits - frac_bits - 1) or v is not finite.
FixedWord encode(double v, FixedPointFormat fmt);
std::vector<FixedWord> encode(std::span<const double> values, FixedPointFormat fmt);

double decode(FixedWord w, FixedPointFormat fmt);
std::vector<double> decode(std::span<const FixedWord> words, FixedPointFormat fmt);

/// Keeps the low total_bits of `value` and sign-extends.
FixedWord wrap(__int128 value, FixedPointFormat fmt);

FixedWord fx_add(FixedWord a, FixedWord b, FixedPointFormat fmt);
FixedWord fx_sub(FixedWord a, FixedWord b, FixedPointFormat fmt);
/// Full-width product, arithmetic shift right by frac_bits, low
/// total_bits kept.
FixedWord fx_mul(FixedWord a, FixedWord b, FixedPointFormat fmt);

// Same arithmetic, but throw OverflowError instead of wrapping.
FixedWord fx_add_checked(FixedWord a, FixedWord b, FixedPointFormat fmt);
FixedWord fx_mul_checked(FixedWord a, FixedWord b, FixedPointFormat fmt);

/// Low total_bits of the word as an unsigned pattern.
std::uint64_t to_unsigned(FixedWord w, FixedPointFormat fmt);

/// LSB-first bit expansion, one byte (0 or 1) per bit.
void append_bits(FixedWord w, FixedPointFormat fmt, std::vector<std::uint8_t>& out);
std::vector<std::uint8_t> to_bits(std::span<const FixedWord> words, FixedPointFormat fmt);
/// Inverse of to_bits; `bits.size()` must be a multiple of total_bits.
std::vector<FixedWord> from_bits(std::span<const std::uint8_t> bits, FixedPointFormat fmt);

}  // namespace geosmpc
