#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace geosmpc {

using Digest = std::array<std::uint8_t, 32>;
using Seed = std::array<std::uint8_t, 32>;

/// 128-bit string used for wire labels, gate rows and OT payloads.
struct Block {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;

  /// Point-and-permute bit, carried in the least significant bit.
  int permute_bit() const { return static_cast<int>(lo & 1); }

  Block operator^(const Block& o) const { return {lo ^ o.lo, hi ^ o.hi}; }
  Block& operator^=(const Block& o) {
    lo ^= o.lo;
    hi ^= o.hi;
    return *this;
  }
  friend bool operator==(const Block&, const Block&) = default;

  std::array<std::uint8_t, 16> bytes() const;
  static Block from_bytes(std::span<const std::uint8_t> bytes);
};

/// Must run once before any other crypto call; idempotent and thread-safe.
void crypto_init();

/// Incremental SHA-256.
class Sha256 {
 public:
  Sha256();
  Sha256& update(std::span<const std::uint8_t> data);
  Sha256& update(std::string_view text);
  Sha256& update_u64(std::uint64_t value);
  Digest finish();

 private:
  alignas(16) std::array<std::uint8_t, 128> state_{};
};

Digest sha256(std::span<const std::uint8_t> data);

/// SHA-256(a || b || tweak) truncated to 128 bits. The garbling cipher.
Block tweaked_hash(const Block& a, const Block& b, std::uint64_t tweak);

/// Deterministic ChaCha20 keystream generator keyed by a 256-bit seed.
class Prg {
 public:
  explicit Prg(const Seed& seed);
  /// Seeded from the operating system's entropy source.
  static Prg from_entropy();

  void fill(std::span<std::uint8_t> out);
  Block next_block();
  std::uint64_t next_u64();
  /// Uniform in [0, bound) by rejection sampling; bound > 0.
  std::uint64_t uniform(std::uint64_t bound);

 private:
  void refill();

  Seed key_;
  std::uint32_t counter_ = 0;
  std::array<std::uint8_t, 1024> buffer_{};
  std::size_t offset_ = 1024;
};

Seed seed_from_u64(std::uint64_t value);
/// Domain-separated child seed: SHA-256(base || label || index).
Seed derive_seed(const Seed& base, std::string_view label, std::uint64_t index);
Seed random_seed();

std::string to_hex(std::span<const std::uint8_t> bytes);

}  // namespace geosmpc
