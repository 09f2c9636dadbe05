#include "geosmpc/garble.hpp"

#include <fmt/format.h>

#include "geosmpc/bytes.hpp"
#include "geosmpc/errors.hpp"

namespace geosmpc {

namespace {

constexpr std::uint64_t kOutputTagDomain = 0x4f55545055540000ull;  // "OUTPUT\0\0"

bool gate_truth(GateKind kind, int a, int b) {
  switch (kind) {
    case GateKind::And: return a & b;
    case GateKind::Or: return a | b;
    case GateKind::Xor: return a ^ b;
    case GateKind::Not: return !a;
  }
  return false;
}

WireLabelPair fresh_pair(Prg& prg) {
  WireLabelPair p{prg.next_block(), prg.next_block()};
  p.one.lo = (p.one.lo & ~std::uint64_t{1}) | static_cast<std::uint64_t>(p.zero.permute_bit() ^ 1);
  return p;
}

std::uint64_t output_tag(const Block& label, std::size_t output_index) {
  return tweaked_hash(label, Block{}, kOutputTagDomain | output_index).lo;
}

}  // namespace

GarbledBundle garble(const Circuit& c, const Seed& seed) {
  Prg prg(seed);
  std::vector<WireLabelPair> wires(c.num_wires);
  for (WireId w : c.input_a) wires[w] = fresh_pair(prg);
  for (WireId w : c.input_b) wires[w] = fresh_pair(prg);

  GarbledBundle out;
  out.circuit.circuit_hash = circuit_hash(c);
  out.circuit.tables.reserve(c.gates.size());
  for (std::size_t g = 0; g < c.gates.size(); ++g) {
    const Gate& gate = c.gates[g];
    if (gate.kind == GateKind::Not) {
      wires[gate.out] = WireLabelPair{wires[gate.in0].one, wires[gate.in0].zero};
      continue;
    }
    const WireLabelPair& a = wires[gate.in0];
    const WireLabelPair& b = wires[gate.in1];
    const WireLabelPair result = fresh_pair(prg);
    GarbledGate table;
    for (int va = 0; va < 2; ++va) {
      for (int vb = 0; vb < 2; ++vb) {
        const Block& ka = a[va];
        const Block& kb = b[vb];
        const int row = 2 * ka.permute_bit() + kb.permute_bit();
        table.rows[row] = tweaked_hash(ka, kb, g) ^ result[gate_truth(gate.kind, va, vb)];
      }
    }
    wires[gate.out] = result;
    out.circuit.tables.push_back(table);
  }

  for (std::size_t o = 0; o < c.outputs.size(); ++o) {
    const WireLabelPair& p = wires[c.outputs[o]];
    out.circuit.output_decoding.push_back(static_cast<std::uint8_t>(p.zero.permute_bit()));
    std::array<std::uint64_t, 2> tags{};
    tags[p.zero.permute_bit()] = output_tag(p.zero, o);
    tags[p.one.permute_bit()] = output_tag(p.one, o);
    out.circuit.output_tags.push_back(tags);
  }
  out.labels_a.reserve(c.input_a.size());
  for (WireId w : c.input_a) out.labels_a.push_back(wires[w]);
  out.labels_b.reserve(c.input_b.size());
  for (WireId w : c.input_b) out.labels_b.push_back(wires[w]);
  return out;
}

std::vector<Block> select_labels(std::span<const WireLabelPair> pairs, std::span<const std::uint8_t> bits) {
  if (pairs.size() != bits.size()) {
    throw LengthError(fmt::format("{} label pairs for {} bits", pairs.size(), bits.size()));
  }
  std::vector<Block> out;
  out.reserve(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) out.push_back(pairs[i][bits[i] & 1]);
  return out;
}

std::vector<Block> evaluate(const GarbledCircuit& gc, const Circuit& c, std::span<const Block> labels_a,
                            std::span<const Block> labels_b) {
  if (labels_a.size() != c.input_a.size() || labels_b.size() != c.input_b.size()) {
    throw InputSizeError(fmt::format("expected {}+{} input labels, got {}+{}", c.input_a.size(), c.input_b.size(),
                                     labels_a.size(), labels_b.size()));
  }
  if (gc.circuit_hash != circuit_hash(c)) throw IntegrityError("garbled tables belong to a different circuit");
  if (gc.output_decoding.size() != c.outputs.size() || gc.output_tags.size() != c.outputs.size()) {
    throw IntegrityError("output decoding does not match the circuit");
  }
  std::vector<Block> wires(c.num_wires);
  for (std::size_t i = 0; i < labels_a.size(); ++i) wires[c.input_a[i]] = labels_a[i];
  for (std::size_t i = 0; i < labels_b.size(); ++i) wires[c.input_b[i]] = labels_b[i];

  std::size_t table = 0;
  for (std::size_t g = 0; g < c.gates.size(); ++g) {
    const Gate& gate = c.gates[g];
    if (gate.kind == GateKind::Not) {
      wires[gate.out] = wires[gate.in0];
      continue;
    }
    if (table >= gc.tables.size()) throw IntegrityError("garbled circuit has too few tables");
    const Block& ka = wires[gate.in0];
    const Block& kb = wires[gate.in1];
    wires[gate.out] = tweaked_hash(ka, kb, g) ^ gc.tables[table++].rows[2 * ka.permute_bit() + kb.permute_bit()];
  }
  if (table != gc.tables.size()) throw IntegrityError("garbled circuit has surplus tables");

  std::vector<Block> out;
  out.reserve(c.outputs.size());
  for (std::size_t o = 0; o < c.outputs.size(); ++o) {
    const Block& label = wires[c.outputs[o]];
    if (output_tag(label, o) != gc.output_tags[o][label.permute_bit()]) {
      throw IntegrityError(fmt::format("output {} decrypted to an invalid label", o));
    }
    out.push_back(label);
  }
  return out;
}

std::vector<std::uint8_t> decode_outputs(std::span<const Block> output_labels,
                                         std::span<const std::uint8_t> decoding) {
  if (output_labels.size() != decoding.size()) {
    throw LengthError(fmt::format("{} output labels for {} decoding bits", output_labels.size(), decoding.size()));
  }
  std::vector<std::uint8_t> bits;
  bits.reserve(decoding.size());
  for (std::size_t i = 0; i < decoding.size(); ++i) {
    bits.push_back(static_cast<std::uint8_t>(output_labels[i].permute_bit() ^ (decoding[i] & 1)));
  }
  return bits;
}

std::vector<std::uint8_t> serialize(const GarbledCircuit& gc) {
  ByteWriter w;
  w.buffer().reserve(32 + 8 + gc.tables.size() * 64 + gc.output_decoding.size() * 17);
  w.bytes(gc.circuit_hash);
  w.u32(static_cast<std::uint32_t>(gc.tables.size()));
  for (const auto& t : gc.tables) {
    for (const auto& row : t.rows) {
      w.u64(row.lo);
      w.u64(row.hi);
    }
  }
  w.u32(static_cast<std::uint32_t>(gc.output_decoding.size()));
  for (std::size_t o = 0; o < gc.output_decoding.size(); ++o) {
    w.u8(gc.output_decoding[o]);
    w.u64(gc.output_tags[o][0]);
    w.u64(gc.output_tags[o][1]);
  }
  return w.take();
}

GarbledCircuit deserialize_garbled(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  GarbledCircuit gc;
  const auto hash = r.bytes(32);
  std::copy(hash.begin(), hash.end(), gc.circuit_hash.begin());
  const auto n_tables = r.u32();
  if (n_tables > r.remaining() / 64) throw FormatError("garbled table count exceeds payload");
  gc.tables.resize(n_tables);
  for (auto& t : gc.tables) {
    for (auto& row : t.rows) {
      row.lo = r.u64();
      row.hi = r.u64();
    }
  }
  const auto n_out = r.u32();
  if (n_out > r.remaining() / 17) throw FormatError("output count exceeds payload");
  gc.output_decoding.resize(n_out);
  gc.output_tags.resize(n_out);
  for (std::size_t o = 0; o < n_out; ++o) {
    gc.output_decoding[o] = r.u8();
    gc.output_tags[o][0] = r.u64();
    gc.output_tags[o][1] = r.u64();
  }
  r.expect_done("garbled circuit");
  return gc;
}

}  // namespace geosmpc
