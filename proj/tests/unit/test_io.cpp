#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "geosmpc/errors.hpp"
#include "geosmpc/io.hpp"
#include "geosmpc/oracle.hpp"
#include "support/fixtures.hpp"

using namespace geosmpc;
using namespace geosmpc::testing;

namespace {

RegionVector attributes(const std::string& text) {
  std::istringstream in(text);
  return parse_attributes(in, "mem");
}

std::filesystem::path temp(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST_CASE("attribute CSV") {
  const auto v = attributes("gid,value\n1,3.0\n2,5.0\n");
  CHECK(v.size() == 2);
  CHECK(v.ids == std::vector<std::string>{"1", "2"});
  CHECK(v.values == std::vector<double>{3.0, 5.0});
  CHECK(attributes("gid,value\r\n7,1e3\r\n\r\n").values == std::vector<double>{1000.0});
  CHECK_THROWS_WITH_AS(attributes("gid,value\n1,3\n1,4\n"), doctest::Contains("'1'"), DuplicateGid);
  CHECK_THROWS_WITH_AS(attributes("gid,value\n1,3\n2,abc\n"), doctest::Contains("mem:3"), ParseError);
  CHECK_THROWS_AS(attributes("gid,value\n1,nan\n"), NonFiniteValue);
  CHECK_THROWS_AS(attributes("gid,value\n1,inf\n"), NonFiniteValue);
  CHECK_THROWS_AS(attributes("id,v\n1,2\n"), ParseError);
  CHECK_THROWS_AS(attributes("gid,value\n1,2,3\n"), ParseError);
  CHECK_THROWS_AS(read_attributes(temp("geosmpc-does-not-exist.csv")), ParseError);
}

TEST_CASE("attribute files round-trip") {
  const auto inst = random_instance(13, 30);
  write_attributes(temp("geosmpc_attr.csv"), inst.x);
  CHECK(read_attributes(temp("geosmpc_attr.csv")) == inst.x);
}

TEST_CASE("centroid CSV picks the metric from the header") {
  std::istringstream planar("gid,x,y\na,0,0\nb,1,0\n");
  CHECK(parse_centroids(planar, "p").metric == DistanceMetric::Planar);
  std::istringstream geo("gid,lon,lat\na,118.8,32.0\nb,120.6,31.3\n");
  const auto g = parse_centroids(geo, "g");
  CHECK(g.metric == DistanceMetric::Haversine);
  CHECK(g.centroids[1].x == 120.6);
  std::istringstream bad("gid,lon,lat\na,200,0\n");
  CHECK_THROWS_AS(parse_centroids(bad, "b"), ParseError);
}

TEST_CASE("weight files") {
  std::istringstream near("gid,a,b,c\na,0,0.5,0.5005\nb,0.5,0,0.5\nc,0.5,0.5,0\n");
  const auto w = parse_weights(near, "w");
  CHECK(w.ids == std::vector<std::string>{"a", "b", "c"});
  CHECK(w.weights(0, 1) + w.weights(0, 2) == doctest::Approx(1.0).epsilon(1e-15));
  std::istringstream far("gid,a,b\na,0,0.7\nb,1,0\n");
  CHECK_THROWS_AS(parse_weights(far, "w"), ParseError);
  std::istringstream ragged("gid,a,b\na,0,1\n");
  CHECK_THROWS_AS(parse_weights(ragged, "w"), ParseError);

  const auto inst = random_instance(13, 31);
  const LabeledWeights lw{inst.x.ids, inst.w};
  write_weights(temp("geosmpc_w.csv"), lw);
  const auto back = read_weights(temp("geosmpc_w.csv"));
  CHECK(back.ids == lw.ids);
  for (std::size_t i = 0; i < 13; ++i)
    for (std::size_t j = 0; j < 13; ++j) CHECK(back.weights(i, j) == doctest::Approx(inst.w(i, j)).epsilon(1e-15));

  auto reversed = inst.x.ids;
  std::reverse(reversed.begin(), reversed.end());
  const auto aligned = align_weights(lw, reversed);
  CHECK(aligned(0, 1) == inst.w(12, 11));
  CHECK_THROWS_AS(align_weights(lw, std::vector<std::string>{"1", "2"}), DimensionError);
}

TEST_CASE("result documents") {
  const auto inst = symmetric_three();
  OracleOptions opts;
  opts.permutations = 99;
  opts.seed = 1;
  auto result = oracle_moran(Statistic::Local, inst.x, inst.y, inst.w, opts);
  result.global = oracle_moran(Statistic::Global, inst.x, inst.y, inst.w, opts).global;

  const auto doc = result_geojson(result);
  CHECK(doc["type"] == "FeatureCollection");
  REQUIRE(doc["features"].size() == 3);
  for (const auto& f : doc["features"]) {
    CHECK(f["geometry"].is_null());
    CHECK(f["properties"].contains("local_I"));
    CHECK(f["properties"].contains("p_value"));
    const std::string cluster = f["properties"]["cluster"];
    const double p = f["properties"]["p_value"];
    if (p > 0.05) CHECK(cluster == "NS");
  }
  const auto docs = write_results(result);
  CHECK(nlohmann::ordered_json::parse(docs.geojson) == doc);
  CHECK(write_results(result).geojson == docs.geojson);
  CHECK(docs.report.find("global I      -0.5\n") != std::string::npos);

  nlohmann::json geometry = {{"type", "FeatureCollection"}, {"features", nlohmann::json::array()}};
  for (int i = 1; i <= 3; ++i) {
    geometry["features"].push_back({{"type", "Feature"},
                                    {"properties", {{"gid", std::to_string(i)}}},
                                    {"geometry", {{"type", "Point"}, {"coordinates", {i, 0}}}}});
  }
  const auto with_geometry = result_geojson(result, &geometry);
  CHECK(with_geometry["features"][2]["geometry"]["coordinates"][0] == 3);
  geometry["features"].erase(geometry["features"].begin());
  CHECK_THROWS_AS(result_geojson(result, &geometry), GeometryMismatch);
}

TEST_CASE("global headline keeps eight significant digits") {
  MoranResult r;
  r.region_ids = {"a", "b", "c"};
  r.global = GlobalMoran{0.8, 0.294687791234, std::nullopt};
  CHECK(format_report(r).find("global I      0.29468779\n") != std::string::npos);
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
