#include "geosmpc/circuit_builder.hpp"

#include <fmt/format.h>

#include "geosmpc/errors.hpp"

namespace geosmpc {

CircuitBuilder::CircuitBuilder(FixedPointFormat fmt) : fmt_(fmt) { fmt_.validate(); }

std::vector<Word> CircuitBuilder::declare_inputs(std::vector<WireId>& owner, std::size_t count) {
  if (!gates_.empty()) throw std::logic_error("inputs must be declared before any gate");
  std::vector<Word> words(count);
  for (auto& word : words) {
    word.reserve(fmt_.total_bits);
    for (int i = 0; i < fmt_.total_bits; ++i) {
      owner.push_back(next_wire_);
      word.push_back(Bit::wire(next_wire_++));
    }
  }
  return words;
}

std::vector<Word> CircuitBuilder::input_words_a(std::size_t count) { return declare_inputs(input_a_, count); }
std::vector<Word> CircuitBuilder::input_words_b(std::size_t count) { return declare_inputs(input_b_, count); }

WireId CircuitBuilder::emit(GateKind kind, WireId a, WireId b) {
  gates_.push_back(Gate{kind, a, b, next_wire_});
  return next_wire_++;
}

Bit CircuitBuilder::and_(Bit a, Bit b) {
  if (a.is_constant()) return a.value() ? b : a;
  if (b.is_constant()) return b.value() ? a : b;
  if (a.id() == b.id()) return a;
  return Bit::wire(emit(GateKind::And, a.id(), b.id()));
}

Bit CircuitBuilder::or_(Bit a, Bit b) {
  if (a.is_constant()) return a.value() ? a : b;
  if (b.is_constant()) return b.value() ? b : a;
  if (a.id() == b.id()) return a;
  return Bit::wire(emit(GateKind::Or, a.id(), b.id()));
}

Bit CircuitBuilder::xor_(Bit a, Bit b) {
  if (a.is_constant()) return a.value() ? not_(b) : b;
  if (b.is_constant()) return b.value() ? not_(a) : a;
  if (a.id() == b.id()) return Bit::constant(false);
  return Bit::wire(emit(GateKind::Xor, a.id(), b.id()));
}

Bit CircuitBuilder::not_(Bit a) {
  if (a.is_constant()) return Bit::constant(!a.value());
  return Bit::wire(emit(GateKind::Not, a.id(), kNoWire));
}

WireId CircuitBuilder::materialize(Bit b) {
  if (!b.is_constant()) return b.id();
  if (next_wire_ == 0) throw std::logic_error("constant output in a circuit without inputs");
  // x AND NOT x is zero for any wire x.
  const WireId inverted = emit(GateKind::Not, 0, kNoWire);
  const WireId zero = emit(GateKind::And, 0, inverted);
  return b.value() ? emit(GateKind::Not, zero, kNoWire) : zero;
}

void CircuitBuilder::add_output(const Word& w) {
  for (const Bit& bit : w) outputs_.push_back(materialize(bit));
}

Circuit CircuitBuilder::finish(std::uint32_t n_regions) {
  Circuit c;
  c.num_wires = next_wire_;
  c.gates = std::move(gates_);
  c.input_a = std::move(input_a_);
  c.input_b = std::move(input_b_);
  c.outputs = std::move(outputs_);
  c.fmt = fmt_;
  c.n_regions = n_regions;
  c.validate();
  return c;
}

namespace gadgets {

namespace {

void check_widths(const Word& x, const Word& y) {
  if (x.size() != y.size()) throw DimensionError(fmt::format("word widths differ: {} vs {}", x.size(), y.size()));
}

// Ripple-carry x + y + carry_in.
Word add_with_carry(CircuitBuilder& b, const Word& x, const Word& y, Bit carry) {
  check_widths(x, y);
  Word sum;
  sum.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Bit t = b.xor_(x[i], y[i]);
    sum.push_back(b.xor_(t, carry));
    if (i + 1 < x.size()) carry = b.or_(b.and_(x[i], y[i]), b.and_(t, carry));
  }
  return sum;
}

Word invert(CircuitBuilder& b, const Word& x) {
  Word out;
  out.reserve(x.size());
  for (const Bit& bit : x) out.push_back(b.not_(bit));
  return out;
}

// acc[offset..) (+|-)= operand, where operand has acc.size() - offset bits.
void accumulate_at(CircuitBuilder& b, Word& acc, std::size_t offset, const Word& operand, bool subtract) {
  const Word hi = slice(acc, offset, acc.size() - offset);
  const Word updated = subtract ? sub(b, hi, operand) : add(b, hi, operand);
  std::copy(updated.begin(), updated.end(), acc.begin() + static_cast<std::ptrdiff_t>(offset));
}

// Non-adjacent form: value = sum_k digit[k] * 2^k with digits in {-1, 0, 1}.
std::vector<int> naf_digits(__int128 value) {
  std::vector<int> digits;
  while (value != 0) {
    int d = 0;
    if (value & 1) {
      const int mod4 = static_cast<int>(value & 3);
      d = mod4 == 1 ? 1 : -1;
      value -= d;
    }
    digits.push_back(d);
    value >>= 1;
  }
  return digits;
}

}  // namespace

Word constant_word(std::uint64_t pattern, std::size_t width) {
  Word w;
  w.reserve(width);
  for (std::size_t i = 0; i < width; ++i) w.push_back(Bit::constant(i < 64 && ((pattern >> i) & 1)));
  return w;
}

Word sign_extend(const Word& w, std::size_t width) {
  Word out(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(std::min(width, w.size())));
  while (out.size() < width) out.push_back(w.back());
  return out;
}

Word slice(const Word& w, std::size_t from, std::size_t count) {
  return Word(w.begin() + static_cast<std::ptrdiff_t>(from), w.begin() + static_cast<std::ptrdiff_t>(from + count));
}

Word add(CircuitBuilder& b, const Word& x, const Word& y) { return add_with_carry(b, x, y, Bit::constant(false)); }

Word sub(CircuitBuilder& b, const Word& x, const Word& y) {
  check_widths(x, y);
  return add_with_carry(b, x, invert(b, y), Bit::constant(true));
}

Word mul_fixed(CircuitBuilder& b, const Word& x, const Word& y) {
  check_widths(x, y);
  const auto fmt = b.format();
  const std::size_t width = fmt.total_bits;
  const std::size_t frac = fmt.frac_bits;
  if (x.size() != width) throw DimensionError("mul_fixed operand width differs from the format");
  const std::size_t full = width + frac;
  const Word y_ext = sign_extend(y, full);
  Word acc = constant_word(0, full);
  // Two's complement: x = sum_{i<w-1} x_i 2^i - x_{w-1} 2^{w-1}.
  for (std::size_t i = 0; i < width; ++i) {
    Word row;
    row.reserve(full - i);
    for (std::size_t j = i; j < full; ++j) row.push_back(b.and_(x[i], y_ext[j - i]));
    accumulate_at(b, acc, i, row, i + 1 == width);
  }
  return slice(acc, frac, width);
}

Word mul_const(CircuitBuilder& b, const Word& x, FixedWord constant) {
  const auto fmt = b.format();
  const std::size_t width = fmt.total_bits;
  const std::size_t frac = fmt.frac_bits;
  if (x.size() != width) throw DimensionError("mul_const operand width differs from the format");
  const std::size_t full = width + frac;
  const Word x_ext = sign_extend(x, full);
  Word acc = constant_word(0, full);
  const auto digits = naf_digits(constant.bits);
  for (std::size_t k = 0; k < digits.size() && k < full; ++k) {
    if (digits[k] == 0) continue;
    accumulate_at(b, acc, k, slice(x_ext, 0, full - k), digits[k] < 0);
  }
  return slice(acc, frac, width);
}

}  // namespace gadgets

namespace {

Circuit binary_fragment(FixedPointFormat fmt, Word (*op)(CircuitBuilder&, const Word&, const Word&)) {
  CircuitBuilder b(fmt);
  const auto x = b.input_words_a(1);
  const auto y = b.input_words_b(1);
  b.add_output(op(b, x[0], y[0]));
  return b.finish(0);
}

std::vector<std::vector<FixedWord>> encode_weights(const WeightMatrix& weights, FixedPointFormat fmt) {
  weights.validate(1e-6);
  if (weights.size() == 0) throw DimensionError("empty weight matrix");
  const std::size_t n = weights.size();
  std::vector<std::vector<FixedWord>> out(n, std::vector<FixedWord>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i][j] = encode(weights(i, j), fmt);
  return out;
}

// Spatial lag of row i: sum_j w[i][j] * zx[j], j ascending.
Word lag_row(CircuitBuilder& b, const std::vector<FixedWord>& row, const std::vector<Word>& zx) {
  Word lag = gadgets::constant_word(0, b.format().total_bits);
  for (std::size_t j = 0; j < row.size(); ++j) lag = gadgets::add(b, lag, gadgets::mul_const(b, zx[j], row[j]));
  return lag;
}

}  // namespace

Circuit build_adder(FixedPointFormat fmt) { return binary_fragment(fmt, &gadgets::add); }
Circuit build_subtractor(FixedPointFormat fmt) { return binary_fragment(fmt, &gadgets::sub); }
Circuit build_multiplier(FixedPointFormat fmt) { return binary_fragment(fmt, &gadgets::mul_fixed); }

Circuit build_const_mul(FixedWord constant, FixedPointFormat fmt) {
  CircuitBuilder b(fmt);
  const auto x = b.input_words_a(1);
  b.add_output(gadgets::mul_const(b, x[0], constant));
  return b.finish(0);
}

Circuit build_global_moran_circuit(const WeightMatrix& weights, FixedPointFormat fmt) {
  const auto w = encode_weights(weights, fmt);
  const std::size_t n = w.size();
  CircuitBuilder b(fmt);
  const auto zx = b.input_words_a(n);
  const auto zy = b.input_words_b(n);
  Word total = gadgets::constant_word(0, fmt.total_bits);
  for (std::size_t i = 0; i < n; ++i) {
    total = gadgets::add(b, total, gadgets::mul_fixed(b, lag_row(b, w[i], zx), zy[i]));
  }
  b.add_output(total);
  return b.finish(static_cast<std::uint32_t>(n));
}

Circuit build_local_moran_circuit(const WeightMatrix& weights, FixedPointFormat fmt) {
  const auto w = encode_weights(weights, fmt);
  const std::size_t n = w.size();
  CircuitBuilder b(fmt);
  const auto zx = b.input_words_a(n);
  const auto zy = b.input_words_b(n);
  for (std::size_t i = 0; i < n; ++i) b.add_output(gadgets::mul_fixed(b, lag_row(b, w[i], zx), zy[i]));
  return b.finish(static_cast<std::uint32_t>(n));
}

const char* to_string(Statistic s) { return s == Statistic::Global ? "global" : "local"; }

Statistic parse_statistic(std::string_view text) {
  if (text == "global") return Statistic::Global;
  if (text == "local") return Statistic::Local;
  throw ParseError(fmt::format("unknown statistic '{}' (expected global or local)", text));
}

Circuit build_moran_circuit(Statistic stat, const WeightMatrix& weights, FixedPointFormat fmt) {
  return stat == Statistic::Global ? build_global_moran_circuit(weights, fmt) : build_local_moran_circuit(weights, fmt);
}

}  // namespace geosmpc
