#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geosmpc/crypto.hpp"
#include "geosmpc/fixedpoint.hpp"

namespace geosmpc {

using WireId = std::uint32_t;
inline constexpr WireId kNoWire = 0xFFFFFFFFu;

enum class GateKind : std::uint8_t { And = 0, Or = 1, Xor = 2, Not = 3 };

const char* to_string(GateKind kind);

/// One Boolean gate. NOT gates use only `in0`; `in1` is kNoWire.
struct Gate {
  GateKind kind = GateKind::And;
  WireId in0 = 0;
  WireId in1 = kNoWire;
  WireId out = 0;

  int arity() const { return kind == GateKind::Not ? 1 : 2; }
  friend bool operator==(const Gate&, const Gate&) = default;
};

/// Boolean circuit with party-tagged inputs.
///
/// Input wires of the initiator (`input_a`) and receiver (`input_b`) together
/// cover exactly [0, |input_a| + |input_b|). Gates are stored in topological
/// order and every gate writes a fresh wire numbered above its inputs, so the
/// non-input wires are exactly the gate outputs in list order.
struct Circuit {
  std::uint32_t num_wires = 0;
  std::vector<Gate> gates;
  std::vector<WireId> input_a;
  std::vector<WireId> input_b;
  std::vector<WireId> outputs;
  FixedPointFormat fmt = kDefaultFormat;
  std::uint32_t n_regions = 0;

  /// Throws FormatError when any structural invariant is broken.
  void validate() const;

  friend bool operator==(const Circuit&, const Circuit&) = default;
};

struct CircuitStats {
  std::uint64_t num_gates = 0;
  std::uint64_t num_wires = 0;
  std::uint64_t input1_bits = 0;
  std::uint64_t input2_bits = 0;
  std::uint64_t output1_bits = 0;
  std::uint64_t not_gates = 0;
  std::uint64_t and_gates = 0;
  std::uint64_t or_gates = 0;
  std::uint64_t xor_gates = 0;
  std::uint64_t serialized_size_bytes = 0;
  std::optional<std::uint64_t> compressed_size_bytes;
  double compile_seconds = 0.0;
  double zip_seconds = 0.0;
};

/// Gate census and sizes. With `measure_compression` the serialization is
/// also deflated to report the compressed size and the time it took.
CircuitStats circuit_stats(const Circuit& c, bool measure_compression = true);

/// Human-readable stats block, one row per line in the order
/// compile time, numGates, numWires, input/output sizes, gate kinds, zip time, size.
std::string format_stats_block(const CircuitStats& stats);

/// Gate-by-gate evaluation. Bits are one byte each (0/1), ordered as the
/// circuit's input_a / input_b / outputs lists. Throws InputSizeError.
std::vector<std::uint8_t> evaluate_plaintext(const Circuit& c, std::span<const std::uint8_t> bits_a,
                                             std::span<const std::uint8_t> bits_b);

/// Little-endian binary encoding ("SMCC" container); deterministic.
std::vector<std::uint8_t> serialize(const Circuit& c);
/// Inverse of serialize; validates the result. Throws FormatError.
Circuit deserialize(std::span<const std::uint8_t> bytes);

/// SHA-256 of serialize(c); binds garbled material to one circuit.
Digest circuit_hash(const Circuit& c);

/// zlib-deflated container ("SMCZ") around a serialized circuit.
std::vector<std::uint8_t> compress_circuit_bytes(std::span<const std::uint8_t> raw);
/// Accepts either container and returns the raw SMCC bytes.
std::vector<std::uint8_t> decompress_circuit_bytes(std::span<const std::uint8_t> bytes);

void write_circuit_file(const std::filesystem::path& path, const Circuit& c, bool compress);
Circuit read_circuit_file(const std::filesystem::path& path);

/// Rewrites every XOR gate as (a OR b) AND NOT (a AND b).
Circuit lower_to_strict_basis(const Circuit& c);

}  // namespace geosmpc
