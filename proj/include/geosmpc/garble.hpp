#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "geosmpc/circuit.hpp"
#include "geosmpc/crypto.hpp"

namespace geosmpc {

/// The two labels of one wire. Their permute bits always differ.
struct WireLabelPair {
  Block zero;
  Block one;

  const Block& operator[](int bit) const { return bit ? one : zero; }
};

/// Four encrypted rows indexed by the input labels' permute bits
/// (row 2*pa + pb).
struct GarbledGate {
  std::array<Block, 4> rows;

  friend bool operator==(const GarbledGate&, const GarbledGate&) = default;
};

/// Garbled tables for every AND/OR/XOR gate in gate order (NOT gates are
/// free), plus what the evaluator needs to read the outputs.
struct GarbledCircuit {
  Digest circuit_hash{};
  std::vector<GarbledGate> tables;
  /// Permute bit of each output wire's 0-label.
  std::vector<std::uint8_t> output_decoding;
  /// Per output wire, a 64-bit tag of the label carrying permute bit 0 and
  /// of the one carrying permute bit 1. Lets the evaluator detect a wrong
  /// label without learning anything beyond the decoded output.
  std::vector<std::array<std::uint64_t, 2>> output_tags;

  friend bool operator==(const GarbledCircuit&, const GarbledCircuit&) = default;
};

struct GarbledBundle {
  GarbledCircuit circuit;
  std::vector<WireLabelPair> labels_a;  ///< one pair per input_a wire
  std::vector<WireLabelPair> labels_b;  ///< one pair per input_b wire
};

/// Garbles `c`; every label is drawn from a ChaCha20 stream keyed by `seed`.
/// Each table row is SHA-256(K_a || K_b || gate index) truncated to 128
/// bits, XORed with the output label.
GarbledBundle garble(const Circuit& c, const Seed& seed);

/// pairs[i][bits[i]] for every i. Throws LengthError.
std::vector<Block> select_labels(std::span<const WireLabelPair> pairs, std::span<const std::uint8_t> bits);

/// Evaluates under labels and returns one label per output wire. Throws
/// IntegrityError when the circuit hash differs or an output label fails
/// its tag check, InputSizeError on a label count mismatch.
std::vector<Block> evaluate(const GarbledCircuit& gc, const Circuit& c, std::span<const Block> labels_a,
                            std::span<const Block> labels_b);

/// bit = permute_bit(label) XOR decoding bit. Throws LengthError.
std::vector<std::uint8_t> decode_outputs(std::span<const Block> output_labels,
                                         std::span<const std::uint8_t> decoding);

/// circuit hash (32 bytes), table count u32, rows in gate order, then
/// output count u32, decoding bits and tags.
std::vector<std::uint8_t> serialize(const GarbledCircuit& gc);
GarbledCircuit deserialize_garbled(std::span<const std::uint8_t> bytes);

}  // namespace geosmpc
