#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "geosmpc/crypto.hpp"
#include "geosmpc/garble.hpp"

namespace geosmpc {

using GroupElement = std::vector<std::uint8_t>;
using Scalar = std::vector<std::uint8_t>;

/// Prime-order group written multiplicatively, with fixed-width encodings.
class OtGroup {
 public:
  virtual ~OtGroup() = default;

  /// Wire identifier carried in the session handshake.
  virtual std::uint8_t id() const = 0;
  virtual std::size_t element_size() const = 0;

  virtual Scalar random_scalar(Prg& prg) const = 0;
  /// g^s
  virtual GroupElement generator_power(const Scalar& s) const = 0;
  /// x^s
  virtual GroupElement power(const GroupElement& x, const Scalar& s) const = 0;
  /// x * y
  virtual GroupElement multiply(const GroupElement& x, const GroupElement& y) const = 0;
  /// x / y
  virtual GroupElement divide(const GroupElement& x, const GroupElement& y) const = 0;
  /// Throws GroupElementError unless `x` encodes a non-identity member.
  virtual void validate(const GroupElement& x) const = 0;
};

/// Ristretto255 (prime order ~2^252). Production group.
std::shared_ptr<const OtGroup> ristretto_group();
/// Order-q subgroup of Z_p^* for the 62-bit safe prime p = 2q + 1 with
/// generator 4. Far too small to be secure; small deterministic test vectors only.
std::shared_ptr<const OtGroup> toy_group();
/// Looks a group up by its handshake id; throws GroupElementError.
std::shared_ptr<const OtGroup> group_by_id(std::uint8_t id);

/// Sender side of one 1-out-of-2 transfer.
struct OTSenderState {
  Scalar a;
  GroupElement big_a;  ///< g^a
  std::uint64_t index = 0;
};

/// Receiver side of one 1-out-of-2 transfer.
struct OTReceiverState {
  int choice = 0;
  Scalar b;
  GroupElement big_a;
  std::uint64_t index = 0;
};

struct OTCiphertexts {
  Block e0;
  Block e1;
};

// Diffie-Hellman style three-message flow:
//   sender   -> A = g^a
//   receiver -> B = g^b (choice 0) or A * g^b (choice 1)
//   sender   -> e_i = H((B / A^i)^a) xor K^i
//   receiver:  K^choice = e_choice xor H(A^b)
// `index` feeds the key derivation so keys of different transfers differ.

std::pair<OTSenderState, GroupElement> ot_sender_round1(const OtGroup& group, Prg& prg, std::uint64_t index = 0);
std::pair<OTReceiverState, GroupElement> ot_receiver_round1(const OtGroup& group, int choice,
                                                           const GroupElement& msg_a, Prg& prg,
                                                           std::uint64_t index = 0);
OTCiphertexts ot_sender_round2(const OtGroup& group, const OTSenderState& state, const GroupElement& msg_b,
                               const WireLabelPair& pair);
Block ot_receiver_finish(const OtGroup& group, const OTReceiverState& state, const OTCiphertexts& cts);

/// Runs one independent transfer per choice bit in-process; used for
/// testing and for the in-process secure pipeline.
std::vector<Block> ot_batch_local(const OtGroup& group, std::span<const WireLabelPair> pairs,
                                  std::span<const std::uint8_t> choices, Prg& sender_prg, Prg& receiver_prg);

}  // namespace geosmpc
