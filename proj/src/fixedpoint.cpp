#include "geosmpc/fixedpoint.hpp"

#include <cmath>
#include <fmt/format.h>

#include "geosmpc/errors.hpp"

namespace geosmpc {

namespace {

__int128 min_value(FixedPointFormat fmt) { return -(static_cast<__int128>(1) << (fmt.total_bits - 1)); }
__int128 max_value(FixedPointFormat fmt) { return (static_cast<__int128>(1) << (fmt.total_bits - 1)) - 1; }

// Arithmetic shift of a signed 128-bit product (floor division by 2^shift).
__int128 shift_floor(__int128 value, int shift) {
  return value >= 0 ? value >> shift : -((-value - 1) >> shift) - 1;
}

}  // namespace

void FixedPointFormat::validate() const {
  if (frac_bits == 0 || frac_bits >= total_bits || total_bits > 64) {
    throw RangeError(fmt::format("invalid fixed-point format {{{},{}}}: need 0 < frac_bits < total_bits <= 64",
                                 total_bits, frac_bits));
  }
}

double FixedPointFormat::encode_limit() const { return std::ldexp(1.0, total_bits - frac_bits - 1); }

double FixedPointFormat::mul_safe_limit() const { return std::ldexp(1.0, (total_bits - frac_bits) / 2 - 1); }

FixedWord encode(double v, FixedPointFormat fmt) {
  fmt.validate();
  if (!std::isfinite(v) || std::fabs(v) >= fmt.encode_limit()) {
    throw RangeError(fmt::format("value {} outside representable range (-{}, {}) of format {{{},{}}}; rescale or widen",
                                 v, fmt.encode_limit(), fmt.encode_limit(), fmt.total_bits, fmt.frac_bits));
  }
  // Scaling by a power of two is exact in binary floating point.
  const double scaled = std::ldexp(v, fmt.frac_bits);
  double rounded = std::floor(scaled);
  const double diff = scaled - rounded;
  if (diff > 0.5 || (diff == 0.5 && std::fmod(rounded, 2.0) != 0.0)) rounded += 1.0;
  const auto bits = static_cast<__int128>(rounded);
  if (bits < min_value(fmt) || bits > max_value(fmt)) {
    throw RangeError(fmt::format("value {} rounds outside format {{{},{}}}", v, fmt.total_bits, fmt.frac_bits));
  }
  return FixedWord{static_cast<std::int64_t>(bits)};
}

std::vector<FixedWord> encode(std::span<const double> values, FixedPointFormat fmt) {
  std::vector<FixedWord> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(encode(v, fmt));
  return out;
}

double decode(FixedWord w, FixedPointFormat fmt) { return std::ldexp(static_cast<double>(w.bits), -fmt.frac_bits); }

std::vector<double> decode(std::span<const FixedWord> words, FixedPointFormat fmt) {
  std::vector<double> out;
  out.reserve(words.size());
  for (auto w : words) out.push_back(decode(w, fmt));
  return out;
}

FixedWord wrap(__int128 value, FixedPointFormat fmt) {
  const int width = fmt.total_bits;
  auto u = static_cast<unsigned __int128>(value);
  if (width < 128) u &= (static_cast<unsigned __int128>(1) << width) - 1;
  const bool negative = (u >> (width - 1)) & 1;
  __int128 s = static_cast<__int128>(u);
  if (negative) s -= static_cast<__int128>(1) << width;
  return FixedWord{static_cast<std::int64_t>(s)};
}

FixedWord fx_add(FixedWord a, FixedWord b, FixedPointFormat fmt) {
  return wrap(static_cast<__int128>(a.bits) + b.bits, fmt);
}

FixedWord fx_sub(FixedWord a, FixedWord b, FixedPointFormat fmt) {
  return wrap(static_cast<__int128>(a.bits) - b.bits, fmt);
}

FixedWord fx_mul(FixedWord a, FixedWord b, FixedPointFormat fmt) {
  const __int128 product = static_cast<__int128>(a.bits) * b.bits;
  return wrap(shift_floor(product, fmt.frac_bits), fmt);
}

FixedWord fx_add_checked(FixedWord a, FixedWord b, FixedPointFormat fmt) {
  const __int128 sum = static_cast<__int128>(a.bits) + b.bits;
  if (sum < min_value(fmt) || sum > max_value(fmt)) {
    throw OverflowError(fmt::format("fx_add overflow: {} + {} in {} bits", a.bits, b.bits, fmt.total_bits));
  }
  return FixedWord{static_cast<std::int64_t>(sum)};
}

FixedWord fx_mul_checked(FixedWord a, FixedWord b, FixedPointFormat fmt) {
  const __int128 shifted = shift_floor(static_cast<__int128>(a.bits) * b.bits, fmt.frac_bits);
  if (shifted < min_value(fmt) || shifted > max_value(fmt)) {
    throw OverflowError(fmt::format("fx_mul overflow: {} * {} in {} bits", a.bits, b.bits, fmt.total_bits));
  }
  return FixedWord{static_cast<std::int64_t>(shifted)};
}

std::uint64_t to_unsigned(FixedWord w, FixedPointFormat fmt) {
  const auto u = static_cast<std::uint64_t>(w.bits);
  return fmt.total_bits == 64 ? u : u & ((std::uint64_t{1} << fmt.total_bits) - 1);
}

void append_bits(FixedWord w, FixedPointFormat fmt, std::vector<std::uint8_t>& out) {
  const auto u = to_unsigned(w, fmt);
  for (int i = 0; i < fmt.total_bits; ++i) out.push_back(static_cast<std::uint8_t>((u >> i) & 1));
}

std::vector<std::uint8_t> to_bits(std::span<const FixedWord> words, FixedPointFormat fmt) {
  std::vector<std::uint8_t> out;
  out.reserve(words.size() * fmt.total_bits);
  for (auto w : words) append_bits(w, fmt, out);
  return out;
}

std::vector<FixedWord> from_bits(std::span<const std::uint8_t> bits, FixedPointFormat fmt) {
  if (bits.size() % fmt.total_bits != 0) {
    throw LengthError(fmt::format("{} bits is not a whole number of {}-bit words", bits.size(), fmt.total_bits));
  }
  std::vector<FixedWord> out;
  out.reserve(bits.size() / fmt.total_bits);
  for (std::size_t base = 0; base < bits.size(); base += fmt.total_bits) {
    unsigned __int128 u = 0;
    for (int i = 0; i < fmt.total_bits; ++i) u |= static_cast<unsigned __int128>(bits[base + i] & 1) << i;
    out.push_back(wrap(static_cast<__int128>(u), fmt));
  }
  return out;
}

}  // namespace geosmpc
