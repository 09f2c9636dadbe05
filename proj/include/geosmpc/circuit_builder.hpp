#pragma once

#include <cstdint>
#include <vector>

#include "geosmpc/circuit.hpp"
#include "geosmpc/fixedpoint.hpp"
#include "geosmpc/spatial.hpp"

namespace geosmpc {

/// A bit of a circuit under construction: a known constant or a wire.
class Bit {
 public:
  static Bit constant(bool value) { return Bit(true, value, 0); }
  static Bit wire(WireId id) { return Bit(false, false, id); }

  bool is_constant() const { return constant_; }
  bool value() const { return value_; }
  WireId id() const { return id_; }

 private:
  Bit(bool constant, bool value, WireId id) : constant_(constant), value_(value), id_(id) {}

  bool constant_;
  bool value_;
  WireId id_;
};

/// Little-endian vector of bits.
using Word = std::vector<Bit>;

/// Emits gates with constant folding. All input wires must be declared
/// before the first gate so they occupy the lowest wire ids.
class CircuitBuilder {
 public:
  explicit CircuitBuilder(FixedPointFormat fmt);

  FixedPointFormat format() const { return fmt_; }

  /// Declares `count` words of fmt.total_bits for the initiator, then the receiver.
  std::vector<Word> input_words_a(std::size_t count);
  std::vector<Word> input_words_b(std::size_t count);

  Bit and_(Bit a, Bit b);
  Bit or_(Bit a, Bit b);
  Bit xor_(Bit a, Bit b);
  Bit not_(Bit a);

  /// Appends the word's bits to the output list; constant bits get a wire.
  void add_output(const Word& w);

  Circuit finish(std::uint32_t n_regions);

  std::size_t gate_count() const { return gates_.size(); }

 private:
  WireId emit(GateKind kind, WireId a, WireId b);
  WireId materialize(Bit b);
  std::vector<Word> declare_inputs(std::vector<WireId>& owner, std::size_t count);

  FixedPointFormat fmt_;
  std::vector<Gate> gates_;
  std::vector<WireId> input_a_;
  std::vector<WireId> input_b_;
  std::vector<WireId> outputs_;
  WireId next_wire_ = 0;
};

/// Arithmetic on words. Widths must match unless stated otherwise; all
/// results wrap modulo 2^width.
namespace gadgets {

Word constant_word(std::uint64_t pattern, std::size_t width);
Word sign_extend(const Word& w, std::size_t width);
/// Bits [from, from + count) of `w`.
Word slice(const Word& w, std::size_t from, std::size_t count);

Word add(CircuitBuilder& b, const Word& x, const Word& y);
Word sub(CircuitBuilder& b, const Word& x, const Word& y);

/// Signed fixed-point product with fx_mul semantics.
Word mul_fixed(CircuitBuilder& b, const Word& x, const Word& y);
/// x times a public fixed-point constant with fx_mul semantics, built by
/// shift-and-add over the constant's signed-digit (NAF) expansion.
Word mul_const(CircuitBuilder& b, const Word& x, FixedWord constant);

}  // namespace gadgets

// Self-contained fragments for testing the gadgets: initiator holds the
// first operand, receiver the second (absent for build_const_mul).
Circuit build_adder(FixedPointFormat fmt);
Circuit build_subtractor(FixedPointFormat fmt);
Circuit build_multiplier(FixedPointFormat fmt);
Circuit build_const_mul(FixedWord constant, FixedPointFormat fmt);

/// Interaction term of global Moran's I: the initiator supplies the
/// standardized x vector, the receiver the standardized y vector (n words
/// each); one output word
///   m_g = sum_i (sum_j w[i][j] * zx[j]) * zy[i]
/// accumulated with i outer and j inner. Weights are public constants.
/// Throws DimensionError unless weights is square and valid.
Circuit build_global_moran_circuit(const WeightMatrix& weights, FixedPointFormat fmt);

/// Local variant: n output words m_l[i] = (sum_j w[i][j] * zx[j]) * zy[i].
Circuit build_local_moran_circuit(const WeightMatrix& weights, FixedPointFormat fmt);

enum class Statistic : std::uint8_t { Global = 0, Local = 1 };
const char* to_string(Statistic s);
Statistic parse_statistic(std::string_view text);

Circuit build_moran_circuit(Statistic stat, const WeightMatrix& weights, FixedPointFormat fmt);

}  // namespace geosmpc
