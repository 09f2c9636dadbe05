#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "geosmpc/circuit.hpp"
#include "geosmpc/esda.hpp"
#include "geosmpc/session.hpp"
#include "geosmpc/spatial.hpp"

namespace geosmpc::testing {

inline std::vector<std::string> numbered_ids(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i + 1));
  return ids;
}

inline RegionVector make_vector(const std::vector<double>& values) {
  return RegionVector{numbered_ids(values.size()), values};
}

struct Instance {
  RegionVector x;
  RegionVector y;
  WeightMatrix w;
};

/// Three regions, every pair equally weighted, x = y = [1, 2, 3].
inline Instance symmetric_three() {
  WeightMatrix w(std::vector<std::vector<double>>{{0, .5, .5}, {.5, 0, .5}, {.5, .5, 0}});
  return {make_vector({1, 2, 3}), make_vector({1, 2, 3}), w};
}

inline Instance random_instance(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, 100.0);
  std::normal_distribution<double> value(50.0, 12.0);
  std::vector<Centroid> centroids;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < n; ++i) {
    centroids.push_back(Centroid{std::to_string(i + 1), coord(rng), coord(rng)});
    x.push_back(value(rng));
    y.push_back(value(rng));
  }
  return {make_vector(x), make_vector(y), build_weights(centroids, DistanceMetric::Planar)};
}

/// Random valid circuit over all four gate kinds.
inline Circuit random_circuit(std::mt19937_64& rng, std::size_t max_gates = 64) {
  Circuit c;
  const std::size_t na = 1 + rng() % 8;
  const std::size_t nb = 1 + rng() % 8;
  for (std::size_t i = 0; i < na; ++i) c.input_a.push_back(static_cast<WireId>(i));
  for (std::size_t i = 0; i < nb; ++i) c.input_b.push_back(static_cast<WireId>(na + i));
  const std::size_t gates = 1 + rng() % max_gates;
  WireId next = static_cast<WireId>(na + nb);
  for (std::size_t g = 0; g < gates; ++g) {
    Gate gate;
    gate.kind = static_cast<GateKind>(rng() % 4);
    gate.in0 = static_cast<WireId>(rng() % next);
    if (gate.kind != GateKind::Not) gate.in1 = static_cast<WireId>(rng() % next);
    gate.out = next++;
    c.gates.push_back(gate);
  }
  c.num_wires = next;
  c.outputs.push_back(next - 1);
  const std::size_t extra = rng() % 8;
  for (std::size_t i = 0; i < extra; ++i) c.outputs.push_back(static_cast<WireId>(rng() % next));
  c.validate();
  return c;
}

inline std::vector<std::uint8_t> random_bits(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::uint8_t> bits(n);
  for (auto& b : bits) b = rng() & 1;
  return bits;
}

inline LocalPairRun run_loopback(const Instance& inst, const SessionConfig& cfg) {
  return run_local_pair(cfg, inst.x, inst.y, inst.w, true);
}

}  // namespace geosmpc::testing
