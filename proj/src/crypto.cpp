#include "geosmpc/crypto.hpp"

#include <sodium.h>

#include <cstring>
#include <mutex>

#include "geosmpc/errors.hpp"

namespace geosmpc {

static_assert(sizeof(crypto_hash_sha256_state) <= 128);

std::array<std::uint8_t, 16> Block::bytes() const {
  std::array<std::uint8_t, 16> out{};
  for (int i = 0; i < 8; ++i) {
    out[i] = static_cast<std::uint8_t>(lo >> (8 * i));
    out[8 + i] = static_cast<std::uint8_t>(hi >> (8 * i));
  }
  return out;
}

Block Block::from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16) throw LengthError("block needs 16 bytes");
  Block b;
  for (int i = 0; i < 8; ++i) {
    b.lo |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    b.hi |= static_cast<std::uint64_t>(bytes[8 + i]) << (8 * i);
  }
  return b;
}

void crypto_init() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw Error("libsodium initialisation failed");
  });
}

Sha256::Sha256() {
  crypto_init();
  crypto_hash_sha256_init(reinterpret_cast<crypto_hash_sha256_state*>(state_.data()));
}

Sha256& Sha256::update(std::span<const std::uint8_t> data) {
  crypto_hash_sha256_update(reinterpret_cast<crypto_hash_sha256_state*>(state_.data()), data.data(), data.size());
  return *this;
}

Sha256& Sha256::update(std::string_view text) {
  return update(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Sha256& Sha256::update_u64(std::uint64_t value) {
  std::array<std::uint8_t, 8> le{};
  for (int i = 0; i < 8; ++i) le[i] = static_cast<std::uint8_t>(value >> (8 * i));
  return update(le);
}

Digest Sha256::finish() {
  Digest out{};
  crypto_hash_sha256_final(reinterpret_cast<crypto_hash_sha256_state*>(state_.data()), out.data());
  return out;
}

Digest sha256(std::span<const std::uint8_t> data) {
  crypto_init();
  Digest out{};
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

Block tweaked_hash(const Block& a, const Block& b, std::uint64_t tweak) {
  std::array<std::uint8_t, 40> msg{};
  const auto ab = a.bytes();
  const auto bb = b.bytes();
  std::memcpy(msg.data(), ab.data(), 16);
  std::memcpy(msg.data() + 16, bb.data(), 16);
  for (int i = 0; i < 8; ++i) msg[32 + i] = static_cast<std::uint8_t>(tweak >> (8 * i));
  std::array<std::uint8_t, 32> digest{};
  crypto_hash_sha256(digest.data(), msg.data(), msg.size());
  return Block::from_bytes(digest);
}

Prg::Prg(const Seed& seed) : key_(seed) { crypto_init(); }

Prg Prg::from_entropy() { return Prg(random_seed()); }

void Prg::refill() {
  static const std::array<std::uint8_t, crypto_stream_chacha20_ietf_NONCEBYTES> nonce{};
  buffer_.fill(0);
  crypto_stream_chacha20_ietf_xor_ic(buffer_.data(), buffer_.data(), buffer_.size(), nonce.data(), counter_,
                                     key_.data());
  counter_ += static_cast<std::uint32_t>(buffer_.size() / 64);
  offset_ = 0;
}

void Prg::fill(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    if (offset_ == buffer_.size()) refill();
    const std::size_t take = std::min(out.size() - done, buffer_.size() - offset_);
    std::memcpy(out.data() + done, buffer_.data() + offset_, take);
    offset_ += take;
    done += take;
  }
}

Block Prg::next_block() {
  std::array<std::uint8_t, 16> raw{};
  fill(raw);
  return Block::from_bytes(raw);
}

std::uint64_t Prg::next_u64() {
  std::array<std::uint8_t, 8> raw{};
  fill(raw);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(raw[i]) << (8 * i);
  return v;
}

std::uint64_t Prg::uniform(std::uint64_t bound) {
  if (bound == 0) throw RangeError("uniform bound must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  for (;;) {
    const std::uint64_t v = next_u64();
    if (v < limit) return v % bound;
  }
}

Seed seed_from_u64(std::uint64_t value) {
  return Sha256().update("geosmpc.seed").update_u64(value).finish();
}

Seed derive_seed(const Seed& base, std::string_view label, std::uint64_t index) {
  return Sha256().update(base).update(label).update_u64(index).finish();
}

Seed random_seed() {
  crypto_init();
  Seed s{};
  randombytes_buf(s.data(), s.size());
  return s;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 15]);
  }
  return out;
}

}  // namespace geosmpc
