#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "geosmpc/esda.hpp"
#include "geosmpc/spatial.hpp"

namespace geosmpc {

// CSV inputs are UTF-8, comma separated, dot decimal, with a header row.
// Parse failures throw ParseError carrying "<source>:<line>".

/// `gid,value` rows.
RegionVector parse_attributes(std::istream& in, const std::string& source);
RegionVector read_attributes(const std::filesystem::path& path);
void write_attributes(const std::filesystem::path& path, const RegionVector& v);

struct CentroidTable {
  std::vector<Centroid> centroids;
  DistanceMetric metric = DistanceMetric::Planar;
};

/// `gid,x,y` (planar, Euclidean) or `gid,lon,lat` (geographic, haversine).
CentroidTable parse_centroids(std::istream& in, const std::string& source);
CentroidTable read_centroids(const std::filesystem::path& path);

struct LabeledWeights {
  std::vector<std::string> ids;
  WeightMatrix weights;
};

/// Square matrix with a `gid,<id_1>,...,<id_n>` header and one `<id_i>,w...`
/// row per region, in header order. Rows summing within 1% of one are
/// re-normalized; other nonzero rows are rejected.
LabeledWeights parse_weights(std::istream& in, const std::string& source);
LabeledWeights read_weights(const std::filesystem::path& path);
void write_weights(const std::filesystem::path& path, const LabeledWeights& w);

/// Reorders labeled weights to follow `ids`; throws DimensionError when
/// the id sets differ.
WeightMatrix align_weights(const LabeledWeights& w, const std::vector<std::string>& ids);

nlohmann::json read_geojson(const std::filesystem::path& path);

struct ResultDocuments {
  std::string geojson;
  std::string report;
};

/// FeatureCollection with one feature per region (gid, local_I, p_value,
/// cluster) and a top-level "moran" summary; geometry copied from
/// `geometry` by matching properties.gid, else null. Throws
/// GeometryMismatch when `geometry` lacks a region.
nlohmann::ordered_json result_geojson(const MoranResult& result, const nlohmann::json* geometry = nullptr);

/// Plain-text summary; the global I headline is printed with eight
/// significant digits.
std::string format_report(const MoranResult& result);

ResultDocuments write_results(const MoranResult& result, const nlohmann::json* geometry = nullptr);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

}  // namespace geosmpc
