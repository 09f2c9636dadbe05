#include "common.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "geosmpc/errors.hpp"
#include "geosmpc/io.hpp"

namespace geosmpc::cli {

FixedPointFormat parse_format(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw RangeError(fmt::format("format '{}' is not of the form W,F", text));
  FixedPointFormat f;
  try {
    f.total_bits = static_cast<std::uint8_t>(std::stoi(text.substr(0, comma)));
    f.frac_bits = static_cast<std::uint8_t>(std::stoi(text.substr(comma + 1)));
  } catch (const std::logic_error&) {
    throw RangeError(fmt::format("format '{}' is not of the form W,F", text));
  }
  f.validate();
  return f;
}

void WeightSource::add_options(CLI::App& app) {
  auto* w = app.add_option("--weights", weights, "Weight matrix CSV (gid,<ids...>)")->check(CLI::ExistingFile);
  auto* c = app.add_option("--centroids", centroids, "Centroid CSV (gid,x,y or gid,lon,lat)")->check(CLI::ExistingFile);
  w->excludes(c);
}

WeightMatrix WeightSource::load(const std::vector<std::string>& ids) const {
  if (!weights.empty()) return align_weights(read_weights(weights), ids);
  if (centroids.empty()) throw RangeError("either --weights or --centroids is required");
  const auto table = read_centroids(centroids);
  std::map<std::string, Centroid> by_id;
  for (const auto& c : table.centroids) by_id.emplace(c.id, c);
  std::vector<Centroid> ordered;
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw DimensionError(fmt::format("no centroid for region '{}'", id));
    ordered.push_back(it->second);
  }
  if (by_id.size() != ids.size()) throw DimensionError("centroid file lists regions missing from the data");
  return build_weights(ordered, table.metric);
}

Synthetic synthetic_instance(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.2, 0.2);
  std::normal_distribution<double> value(100.0, 25.0);
  Synthetic s;
  std::vector<Centroid> centroids;
  for (std::size_t i = 0; i < n; ++i) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    const double radius = 10.0 * (1.0 + jitter(rng));
    const auto id = std::to_string(i + 1);
    centroids.push_back(Centroid{id, radius * std::cos(angle), radius * std::sin(angle)});
    s.x.ids.push_back(id);
    s.y.ids.push_back(id);
    s.x.values.push_back(value(rng));
    s.y.values.push_back(value(rng));
  }
  s.w = build_weights(centroids, DistanceMetric::Planar);
  return s;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(fmt::format("cannot write {}", path));
  out << text;
}

}  // namespace geosmpc::cli
