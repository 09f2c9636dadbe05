#include "geosmpc/ot.hpp"

#include <sodium.h>

#include <fmt/format.h>

#include "geosmpc/errors.hpp"

namespace geosmpc {

namespace {

class RistrettoGroup final : public OtGroup {
 public:
  RistrettoGroup() { crypto_init(); }

  std::uint8_t id() const override { return 1; }
  std::size_t element_size() const override { return crypto_core_ristretto255_BYTES; }

  Scalar random_scalar(Prg& prg) const override {
    std::array<std::uint8_t, crypto_core_ristretto255_NONREDUCEDSCALARBYTES> wide{};
    Scalar s(crypto_core_ristretto255_SCALARBYTES);
    do {
      prg.fill(wide);
      crypto_core_ristretto255_scalar_reduce(s.data(), wide.data());
    } while (sodium_is_zero(s.data(), s.size()));
    return s;
  }

  GroupElement generator_power(const Scalar& s) const override {
    GroupElement out(element_size());
    if (crypto_scalarmult_ristretto255_base(out.data(), s.data()) != 0) throw GroupElementError("degenerate scalar");
    return out;
  }

  GroupElement power(const GroupElement& x, const Scalar& s) const override {
    validate(x);
    GroupElement out(element_size());
    if (crypto_scalarmult_ristretto255(out.data(), s.data(), x.data()) != 0) {
      throw GroupElementError("scalar multiplication produced the identity");
    }
    return out;
  }

  GroupElement multiply(const GroupElement& x, const GroupElement& y) const override {
    validate(x);
    validate(y);
    GroupElement out(element_size());
    crypto_core_ristretto255_add(out.data(), x.data(), y.data());
    return out;
  }

  GroupElement divide(const GroupElement& x, const GroupElement& y) const override {
    validate(x);
    validate(y);
    GroupElement out(element_size());
    crypto_core_ristretto255_sub(out.data(), x.data(), y.data());
    return out;
  }

  void validate(const GroupElement& x) const override {
    if (x.size() != element_size() || crypto_core_ristretto255_is_valid_point(x.data()) != 1) {
      throw GroupElementError("invalid ristretto255 encoding");
    }
  }
};

class ToyGroup final : public OtGroup {
 public:
  static constexpr std::uint64_t kP = 4611686018427377339ull;  // safe prime, 2q + 1
  static constexpr std::uint64_t kQ = (kP - 1) / 2;
  static constexpr std::uint64_t kG = 4;

  std::uint8_t id() const override { return 2; }
  std::size_t element_size() const override { return 8; }

  Scalar random_scalar(Prg& prg) const override { return encode(1 + prg.uniform(kQ - 1)); }

  GroupElement generator_power(const Scalar& s) const override { return encode(pow_mod(kG, decode(s))); }

  GroupElement power(const GroupElement& x, const Scalar& s) const override {
    validate(x);
    return encode(pow_mod(decode(x), decode(s)));
  }

  GroupElement multiply(const GroupElement& x, const GroupElement& y) const override {
    validate(x);
    validate(y);
    return encode(mul_mod(decode(x), decode(y)));
  }

  GroupElement divide(const GroupElement& x, const GroupElement& y) const override {
    validate(x);
    validate(y);
    // y^(q-1) = y^-1 inside the order-q subgroup.
    return encode(mul_mod(decode(x), pow_mod(decode(y), kQ - 1)));
  }

  void validate(const GroupElement& x) const override {
    if (x.size() != 8) throw GroupElementError("toy group element must be 8 bytes");
    const auto v = decode(x);
    if (v <= 1 || v >= kP || pow_mod(v, kQ) != 1) throw GroupElementError("value outside the order-q subgroup");
  }

 private:
  static std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b) {
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % kP);
  }
  static std::uint64_t pow_mod(std::uint64_t base, std::uint64_t e) {
    std::uint64_t r = 1;
    while (e) {
      if (e & 1) r = mul_mod(r, base);
      base = mul_mod(base, base);
      e >>= 1;
    }
    return r;
  }
  static std::vector<std::uint8_t> encode(std::uint64_t v) {
    std::vector<std::uint8_t> out(8);
    for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
    return out;
  }
  static std::uint64_t decode(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() != 8) throw GroupElementError("toy group value must be 8 bytes");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
  }
};

Block derive_key(const GroupElement& shared, std::uint64_t index) {
  const auto d = Sha256().update("geosmpc.ot").update_u64(index).update(shared).finish();
  return Block::from_bytes(d);
}

}  // namespace

std::shared_ptr<const OtGroup> ristretto_group() {
  static const auto group = std::make_shared<const RistrettoGroup>();
  return group;
}

std::shared_ptr<const OtGroup> toy_group() {
  static const auto group = std::make_shared<const ToyGroup>();
  return group;
}

std::shared_ptr<const OtGroup> group_by_id(std::uint8_t id) {
  if (id == 1) return ristretto_group();
  if (id == 2) return toy_group();
  throw GroupElementError(fmt::format("unknown OT group id {}", id));
}

std::pair<OTSenderState, GroupElement> ot_sender_round1(const OtGroup& group, Prg& prg, std::uint64_t index) {
  OTSenderState st;
  st.a = group.random_scalar(prg);
  st.big_a = group.generator_power(st.a);
  st.index = index;
  return {st, st.big_a};
}

std::pair<OTReceiverState, GroupElement> ot_receiver_round1(const OtGroup& group, int choice,
                                                           const GroupElement& msg_a, Prg& prg,
                                                           std::uint64_t index) {
  group.validate(msg_a);
  OTReceiverState st;
  st.choice = choice & 1;
  st.b = group.random_scalar(prg);
  st.big_a = msg_a;
  st.index = index;
  GroupElement msg_b = group.generator_power(st.b);
  if (st.choice) msg_b = group.multiply(msg_a, msg_b);
  return {st, msg_b};
}

OTCiphertexts ot_sender_round2(const OtGroup& group, const OTSenderState& state, const GroupElement& msg_b,
                               const WireLabelPair& pair) {
  group.validate(msg_b);
  const Block k0 = derive_key(group.power(msg_b, state.a), state.index);
  const Block k1 = derive_key(group.power(group.divide(msg_b, state.big_a), state.a), state.index);
  return {k0 ^ pair.zero, k1 ^ pair.one};
}

Block ot_receiver_finish(const OtGroup& group, const OTReceiverState& state, const OTCiphertexts& cts) {
  const Block k = derive_key(group.power(state.big_a, state.b), state.index);
  return k ^ (state.choice ? cts.e1 : cts.e0);
}

std::vector<Block> ot_batch_local(const OtGroup& group, std::span<const WireLabelPair> pairs,
                                  std::span<const std::uint8_t> choices, Prg& sender_prg, Prg& receiver_prg) {
  if (pairs.size() != choices.size()) {
    throw LengthError(fmt::format("{} OT pairs for {} choice bits", pairs.size(), choices.size()));
  }
  std::vector<Block> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto [sender, msg_a] = ot_sender_round1(group, sender_prg, i);
    auto [receiver, msg_b] = ot_receiver_round1(group, choices[i], msg_a, receiver_prg, i);
    out.push_back(ot_receiver_finish(group, receiver, ot_sender_round2(group, sender, msg_b, pairs[i])));
  }
  return out;
}

}  // namespace geosmpc
