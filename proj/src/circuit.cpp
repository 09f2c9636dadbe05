#include "geosmpc/circuit.hpp"

#include <zlib.h>

#include <chrono>
#include <fstream>
#include <iterator>
#include <fmt/format.h>

#include "geosmpc/bytes.hpp"
#include "geosmpc/errors.hpp"

namespace geosmpc {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'S', 'M', 'C', 'C'};
constexpr std::array<std::uint8_t, 4> kZipMagic{'S', 'M', 'C', 'Z'};
constexpr std::uint16_t kVersion = 1;

bool has_magic(std::span<const std::uint8_t> bytes, const std::array<std::uint8_t, 4>& magic) {
  return bytes.size() >= 4 && std::equal(magic.begin(), magic.end(), bytes.begin());
}

}  // namespace

const char* to_string(GateKind kind) {
  switch (kind) {
    case GateKind::And: return "AND";
    case GateKind::Or: return "OR";
    case GateKind::Xor: return "XOR";
    case GateKind::Not: return "NOT";
  }
  return "?";
}

void Circuit::validate() const {
  fmt.validate();
  const std::size_t n_inputs = input_a.size() + input_b.size();
  if (n_inputs + gates.size() != num_wires) {
    throw FormatError(fmt::format("wire count {} != inputs {} + gates {}", num_wires, n_inputs, gates.size()));
  }
  std::vector<std::uint8_t> seen(n_inputs, 0);
  for (const auto* list : {&input_a, &input_b}) {
    for (WireId w : *list) {
      if (w >= n_inputs) throw FormatError(fmt::format("input wire {} outside [0, {})", w, n_inputs));
      if (seen[w]++) throw FormatError(fmt::format("input wire {} listed twice", w));
    }
  }
  WireId expected = static_cast<WireId>(n_inputs);
  for (std::size_t g = 0; g < gates.size(); ++g) {
    const Gate& gate = gates[g];
    if (static_cast<std::uint8_t>(gate.kind) > 3) throw FormatError(fmt::format("gate {} has unknown kind", g));
    if (gate.out != expected++) throw FormatError(fmt::format("gate {} writes wire {} out of order", g, gate.out));
    if (gate.in0 >= gate.out) throw FormatError(fmt::format("gate {} reads wire {} not below its output", g, gate.in0));
    if (gate.kind == GateKind::Not) {
      if (gate.in1 != kNoWire) throw FormatError(fmt::format("NOT gate {} has two inputs", g));
    } else if (gate.in1 >= gate.out) {
      throw FormatError(fmt::format("gate {} reads wire {} not below its output", g, gate.in1));
    }
  }
  for (WireId w : outputs) {
    if (w >= num_wires) throw FormatError(fmt::format("output wire {} out of range", w));
  }
}

CircuitStats circuit_stats(const Circuit& c, bool measure_compression) {
  CircuitStats s;
  s.num_gates = c.gates.size();
  s.num_wires = c.num_wires;
  s.input1_bits = c.input_a.size();
  s.input2_bits = c.input_b.size();
  s.output1_bits = c.outputs.size();
  for (const Gate& g : c.gates) {
    switch (g.kind) {
      case GateKind::And: ++s.and_gates; break;
      case GateKind::Or: ++s.or_gates; break;
      case GateKind::Xor: ++s.xor_gates; break;
      case GateKind::Not: ++s.not_gates; break;
    }
  }
  const auto raw = serialize(c);
  s.serialized_size_bytes = raw.size();
  if (measure_compression) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto zipped = compress_circuit_bytes(raw);
    s.zip_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    s.compressed_size_bytes = zipped.size();
  }
  return s;
}

std::string format_stats_block(const CircuitStats& s) {
  std::string out;
  out += fmt::format("Compile time  {:.6f} s\n", s.compile_seconds);
  out += fmt::format("numGates      {}\n", s.num_gates);
  out += fmt::format("numWires      {}\n", s.num_wires);
  out += fmt::format("input1 size   {} bit\n", s.input1_bits);
  out += fmt::format("input2 size   {} bit\n", s.input2_bits);
  out += fmt::format("output1 size  {} bit\n", s.output1_bits);
  out += fmt::format("NOT           {}\n", s.not_gates);
  out += fmt::format("AND           {}\n", s.and_gates);
  out += fmt::format("OR            {}\n", s.or_gates);
  out += fmt::format("XOR           {}\n", s.xor_gates);
  out += fmt::format("Zip time      {:.6f} s\n", s.zip_seconds);
  const double mib = static_cast<double>(s.compressed_size_bytes.value_or(s.serialized_size_bytes)) / (1024.0 * 1024.0);
  out += fmt::format("Size          {:.2f} MB\n", mib);
  return out;
}

std::vector<std::uint8_t> evaluate_plaintext(const Circuit& c, std::span<const std::uint8_t> bits_a,
                                             std::span<const std::uint8_t> bits_b) {
  if (bits_a.size() != c.input_a.size() || bits_b.size() != c.input_b.size()) {
    throw InputSizeError(fmt::format("expected {}+{} input bits, got {}+{}", c.input_a.size(), c.input_b.size(),
                                     bits_a.size(), bits_b.size()));
  }
  std::vector<std::uint8_t> wires(c.num_wires, 0);
  for (std::size_t i = 0; i < bits_a.size(); ++i) wires[c.input_a[i]] = bits_a[i] & 1;
  for (std::size_t i = 0; i < bits_b.size(); ++i) wires[c.input_b[i]] = bits_b[i] & 1;
  for (const Gate& g : c.gates) {
    const std::uint8_t a = wires[g.in0];
    switch (g.kind) {
      case GateKind::And: wires[g.out] = a & wires[g.in1]; break;
      case GateKind::Or: wires[g.out] = a | wires[g.in1]; break;
      case GateKind::Xor: wires[g.out] = a ^ wires[g.in1]; break;
      case GateKind::Not: wires[g.out] = a ^ 1; break;
    }
  }
  std::vector<std::uint8_t> out;
  out.reserve(c.outputs.size());
  for (WireId w : c.outputs) out.push_back(wires[w]);
  return out;
}

std::vector<std::uint8_t> serialize(const Circuit& c) {
  ByteWriter w;
  w.bytes(kMagic);
  w.u16(kVersion);
  w.u8(c.fmt.total_bits);
  w.u8(c.fmt.frac_bits);
  w.u32(c.n_regions);
  w.u32(c.num_wires);
  for (const auto* list : {&c.input_a, &c.input_b, &c.outputs}) {
    w.u32(static_cast<std::uint32_t>(list->size()));
    for (WireId id : *list) w.u32(id);
  }
  w.u32(static_cast<std::uint32_t>(c.gates.size()));
  w.buffer().reserve(w.buffer().size() + c.gates.size() * 13);
  for (const Gate& g : c.gates) {
    w.u8(static_cast<std::uint8_t>(g.kind));
    w.u32(g.in0);
    w.u32(g.in1);
    w.u32(g.out);
  }
  return w.take();
}

Circuit deserialize(std::span<const std::uint8_t> bytes) {
  if (!has_magic(bytes, kMagic)) throw FormatError("not a circuit file (bad magic)");
  ByteReader r(bytes.subspan(4));
  const auto version = r.u16();
  if (version != kVersion) throw FormatError(fmt::format("unsupported circuit version {}", version));
  Circuit c;
  c.fmt.total_bits = r.u8();
  c.fmt.frac_bits = r.u8();
  c.n_regions = r.u32();
  c.num_wires = r.u32();
  for (auto* list : {&c.input_a, &c.input_b, &c.outputs}) {
    const auto n = r.u32();
    if (n > r.remaining() / 4) throw FormatError("wire list longer than file");
    list->resize(n);
    for (auto& id : *list) id = r.u32();
  }
  const auto n_gates = r.u32();
  if (n_gates > r.remaining() / 13) throw FormatError("gate list longer than file");
  c.gates.resize(n_gates);
  for (auto& g : c.gates) {
    const auto kind = r.u8();
    if (kind > 3) throw FormatError(fmt::format("unknown gate kind {}", kind));
    g.kind = static_cast<GateKind>(kind);
    g.in0 = r.u32();
    g.in1 = r.u32();
    g.out = r.u32();
  }
  r.expect_done("circuit");
  try {
    c.validate();
  } catch (const RangeError& e) {
    throw FormatError(e.what());
  }
  return c;
}

Digest circuit_hash(const Circuit& c) { return sha256(serialize(c)); }

std::vector<std::uint8_t> compress_circuit_bytes(std::span<const std::uint8_t> raw) {
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> zipped(bound);
  if (compress2(zipped.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw FormatError("zlib compression failed");
  }
  zipped.resize(bound);
  ByteWriter w;
  w.bytes(kZipMagic);
  w.u16(kVersion);
  w.u64(raw.size());
  w.bytes(zipped);
  return w.take();
}

std::vector<std::uint8_t> decompress_circuit_bytes(std::span<const std::uint8_t> bytes) {
  if (has_magic(bytes, kMagic)) return {bytes.begin(), bytes.end()};
  if (!has_magic(bytes, kZipMagic)) throw FormatError("not a circuit file (bad magic)");
  ByteReader r(bytes.subspan(4));
  const auto version = r.u16();
  if (version != kVersion) throw FormatError(fmt::format("unsupported circuit version {}", version));
  const auto raw_size = r.u64();
  if (raw_size > (std::uint64_t{1} << 32)) throw FormatError("declared circuit size too large");
  const auto payload = r.bytes(r.remaining());
  std::vector<std::uint8_t> raw(raw_size);
  uLongf len = static_cast<uLongf>(raw_size);
  if (uncompress(raw.data(), &len, payload.data(), static_cast<uLong>(payload.size())) != Z_OK || len != raw_size) {
    throw FormatError("corrupt compressed circuit");
  }
  return raw;
}

void write_circuit_file(const std::filesystem::path& path, const Circuit& c, bool compress) {
  auto bytes = serialize(c);
  if (compress) bytes = compress_circuit_bytes(bytes);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Circuit read_circuit_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot read {}", path.string()));
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(decompress_circuit_bytes(bytes));
}

Circuit lower_to_strict_basis(const Circuit& c) {
  Circuit out;
  out.fmt = c.fmt;
  out.n_regions = c.n_regions;
  out.input_a = c.input_a;
  out.input_b = c.input_b;
  const auto n_inputs = static_cast<WireId>(c.input_a.size() + c.input_b.size());
  std::vector<WireId> remap(c.num_wires);
  for (WireId w = 0; w < n_inputs; ++w) remap[w] = w;
  WireId next = n_inputs;
  auto emit = [&](GateKind kind, WireId a, WireId b) {
    out.gates.push_back(Gate{kind, a, b, next});
    return next++;
  };
  for (const Gate& g : c.gates) {
    const WireId a = remap[g.in0];
    const WireId b = g.kind == GateKind::Not ? kNoWire : remap[g.in1];
    if (g.kind == GateKind::Xor) {
      const WireId either = emit(GateKind::Or, a, b);
      const WireId both = emit(GateKind::And, a, b);
      const WireId not_both = emit(GateKind::Not, both, kNoWire);
      remap[g.out] = emit(GateKind::And, either, not_both);
    } else {
      remap[g.out] = emit(g.kind, a, b);
    }
  }
  out.num_wires = next;
  for (WireId w : c.outputs) out.outputs.push_back(remap[w]);
  return out;
}

}  // namespace geosmpc
