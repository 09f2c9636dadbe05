#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "geosmpc/circuit.hpp"
#include "geosmpc/circuit_builder.hpp"
#include "geosmpc/errors.hpp"
#include "geosmpc/oracle.hpp"
#include "support/fixtures.hpp"

using namespace geosmpc;
using namespace geosmpc::testing;

namespace {

const FixedPointFormat q16{32, 16};

std::vector<std::uint8_t> bits_of(std::initializer_list<double> values) {
  std::vector<FixedWord> words;
  for (double v : values) words.push_back(encode(v, q16));
  return to_bits(words, q16);
}

std::vector<FixedWord> run(const Circuit& c, const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  return from_bits(evaluate_plaintext(c, a, b), q16);
}

Circuit single_gate(GateKind kind) {
  Circuit c;
  c.input_a = {0};
  c.input_b = {1};
  c.gates = {Gate{kind, 0, kind == GateKind::Not ? kNoWire : 1, 2}};
  c.outputs = {2};
  c.num_wires = 3;
  return c;
}

}  // namespace

TEST_CASE("single gates under plaintext evaluation") {
  const std::uint8_t one = 1, zero = 0;
  CHECK(evaluate_plaintext(single_gate(GateKind::Xor), std::span(&one, 1), std::span(&one, 1))[0] == 0);
  CHECK(evaluate_plaintext(single_gate(GateKind::Or), std::span(&one, 1), std::span(&zero, 1))[0] == 1);
  CHECK(evaluate_plaintext(single_gate(GateKind::Or), std::span(&zero, 1), std::span(&zero, 1))[0] == 0);
  CHECK(evaluate_plaintext(single_gate(GateKind::And), std::span(&one, 1), std::span(&zero, 1))[0] == 0);
  CHECK(evaluate_plaintext(single_gate(GateKind::Not), std::span(&zero, 1), std::span(&zero, 1))[0] == 1);
  CHECK_THROWS_AS(evaluate_plaintext(single_gate(GateKind::Or), std::span(&one, 1), {}), InputSizeError);
}

TEST_CASE("validation rejects forward references") {
  Circuit c = single_gate(GateKind::And);
  c.gates[0].in1 = 2;
  CHECK_THROWS_AS(c.validate(), FormatError);
  c = single_gate(GateKind::And);
  c.outputs = {7};
  CHECK_THROWS_AS(c.validate(), FormatError);
}

TEST_CASE("arithmetic fragments") {
  CHECK(run(build_adder(q16), bits_of({1}), bits_of({2}))[0] == encode(3, q16));
  CHECK(run(build_subtractor(q16), bits_of({1}), bits_of({2.5}))[0] == encode(-1.5, q16));
  CHECK(run(build_multiplier(q16), bits_of({0.5}), bits_of({0.5}))[0] == encode(0.25, q16));
  CHECK(run(build_const_mul(encode(-0.75, q16), q16), bits_of({2}), {})[0] == encode(-1.5, q16));
}

TEST_CASE("fragments agree with fixed-point semantics on random words") {
  std::mt19937_64 rng(5);
  const auto add = build_adder(q16), sub = build_subtractor(q16), mul = build_multiplier(q16);
  for (int i = 0; i < 200; ++i) {
    const FixedWord a{static_cast<std::int32_t>(rng())}, b{static_cast<std::int32_t>(rng())};
    const auto ba = to_bits(std::vector{a}, q16), bb = to_bits(std::vector{b}, q16);
    CHECK(run(add, ba, bb)[0] == fx_add(a, b, q16));
    CHECK(run(sub, ba, bb)[0] == fx_sub(a, b, q16));
    CHECK(run(mul, ba, bb)[0] == fx_mul(a, b, q16));
    CHECK(run(build_const_mul(b, q16), ba, {})[0] == fx_mul(a, b, q16));
  }
}

TEST_CASE("symmetric three-region circuits") {
  const auto inst = symmetric_three();
  const double a = std::sqrt(1.5);
  const auto z = bits_of({-a, 0, a});
  const auto m_g = decode(run(build_global_moran_circuit(inst.w, q16), z, z)[0], q16);
  CHECK(m_g == doctest::Approx(-1.5).epsilon(1e-4));
  const auto m_l = decode(run(build_local_moran_circuit(inst.w, q16), z, z), q16);
  REQUIRE(m_l.size() == 3);
  CHECK(m_l[0] == doctest::Approx(-0.75).epsilon(1e-4));
  CHECK(m_l[1] == 0.0);
  CHECK(m_l[2] == doctest::Approx(-0.75).epsilon(1e-4));
}

TEST_CASE("n = 5 circuits equal the fixed-point oracle") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> d(0, 1);
  const auto inst = random_instance(5, 8);
  const auto global = build_global_moran_circuit(inst.w, q16);
  const auto local = build_local_moran_circuit(inst.w, q16);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> zx(5), zy(5);
    for (auto& v : zx) v = d(rng);
    for (auto& v : zy) v = d(rng);
    const auto wx = encode(zx, q16), wy = encode(zy, q16);
    const auto bx = to_bits(wx, q16), by = to_bits(wy, q16);
    CHECK(run(global, bx, by)[0] == fixed_global_interaction(wx, wy, inst.w, q16));
    CHECK(run(local, bx, by) == fixed_local_interaction(wx, wy, inst.w, q16));
  }
}

TEST_CASE("shape and stats of the n = 13 circuits") {
  const auto inst = random_instance(13, 9);
  const auto g = build_global_moran_circuit(inst.w, q16);
  const auto l = build_local_moran_circuit(inst.w, q16);
  const auto sg = circuit_stats(g, false);
  const auto sl = circuit_stats(l, false);
  CHECK(sg.input1_bits == 416);
  CHECK(sg.input2_bits == 416);
  CHECK(sg.output1_bits == 32);
  CHECK(sl.output1_bits == 416);
  CHECK(sg.not_gates + sg.and_gates + sg.or_gates + sg.xor_gates == sg.num_gates);
  CHECK(sg.num_gates >= 30000);
  CHECK(sg.num_gates <= 600000);
  CHECK(deserialize(serialize(g)) == g);
  CHECK(deserialize(serialize(l)) == l);
  CHECK(serialize(build_global_moran_circuit(inst.w, q16)) == serialize(g));
  CHECK_THROWS_AS(build_global_moran_circuit(WeightMatrix(std::vector<std::vector<double>>{{0, 1}, {1, 0}, {1, 1}}), q16),
                  DimensionError);
}

TEST_CASE("stats block follows the fixed row order") {
  const auto c = build_global_moran_circuit(symmetric_three().w, q16);
  auto stats = circuit_stats(c, true);
  REQUIRE(stats.compressed_size_bytes);
  const auto text = format_stats_block(stats);
  const char* rows[] = {"Compile time", "numGates", "numWires", "input1 size", "input2 size", "output1 size",
                        "NOT", "AND", "OR", "XOR", "Zip time", "Size"};
  std::size_t pos = 0;
  for (const char* row : rows) {
    const auto at = text.find(row, pos);
    CHECK_MESSAGE(at != std::string::npos, row);
    pos = at;
  }
  CHECK(text.find("input1 size   96 bit") != std::string::npos);
}

TEST_CASE("malformed circuit bytes") {
  auto bytes = serialize(single_gate(GateKind::And));
  CHECK_THROWS_AS(deserialize(std::span(bytes).first(bytes.size() - 1)), FormatError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(deserialize(bad_magic), FormatError);
  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK_THROWS_WITH_AS(deserialize(bad_version), doctest::Contains("version"), FormatError);
  CHECK_THROWS_AS(deserialize(std::vector<std::uint8_t>{}), FormatError);
}

TEST_CASE("compressed container and files round-trip") {
  const auto c = build_local_moran_circuit(symmetric_three().w, q16);
  const auto raw = serialize(c);
  const auto zipped = compress_circuit_bytes(raw);
  CHECK(zipped.size() < raw.size());
  CHECK(decompress_circuit_bytes(zipped) == raw);
  const auto dir = std::filesystem::temp_directory_path();
  write_circuit_file(dir / "geosmpc_test.smc", c, false);
  write_circuit_file(dir / "geosmpc_test.smcz", c, true);
  CHECK(read_circuit_file(dir / "geosmpc_test.smc") == c);
  CHECK(read_circuit_file(dir / "geosmpc_test.smcz") == c);
}

TEST_CASE("strict basis lowering preserves the function") {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 100; ++t) {
    const auto c = random_circuit(rng);
    const auto strict = lower_to_strict_basis(c);
    CHECK(circuit_stats(strict, false).xor_gates == 0);
    const auto a = random_bits(rng, c.input_a.size()), b = random_bits(rng, c.input_b.size());
    CHECK(evaluate_plaintext(strict, a, b) == evaluate_plaintext(c, a, b));
  }
}
