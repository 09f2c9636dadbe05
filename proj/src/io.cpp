#include "geosmpc/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <fmt/format.h>

#include "geosmpc/errors.hpp"

namespace geosmpc {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

/// Reads non-blank lines, tracking 1-based line numbers.
class CsvReader {
 public:
  CsvReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  bool next(std::vector<std::string>& cells) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line_no_ == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
      if (trim(line).empty()) continue;
      cells = split_row(line);
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(fmt::format("{}:{}: {}", source_, line_no_, message));
  }

  double number(const std::string& cell) const {
    double v = 0.0;
    const auto* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(cell.data(), end, v);
    if (cell.empty() || ec != std::errc() || ptr != end) fail(fmt::format("'{}' is not a number", cell));
    if (!std::isfinite(v)) {
      throw NonFiniteValue(fmt::format("{}:{}: value '{}' is not finite", source_, line_no_, cell));
    }
    return v;
  }

  const std::string& source() const { return source_; }
  int line() const { return line_no_; }

 private:
  std::istream& in_;
  std::string source_;
  int line_no_ = 0;
};

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("{}: cannot open file", path.string()));
  return in;
}

std::string gid_of(const nlohmann::json& feature) {
  const auto props = feature.find("properties");
  if (props == feature.end() || !props->is_object()) return {};
  const auto gid = props->find("gid");
  if (gid == props->end()) return {};
  if (gid->is_string()) return gid->get<std::string>();
  if (gid->is_number_integer()) return std::to_string(gid->get<long long>());
  return gid->dump();
}

}  // namespace

std::string format_double(double v) { return fmt::format("{}", v); }

RegionVector parse_attributes(std::istream& in, const std::string& source) {
  CsvReader csv(in, source);
  std::vector<std::string> cells;
  if (!csv.next(cells)) csv.fail("empty file");
  if (cells.size() != 2 || cells[0] != "gid" || cells[1] != "value") csv.fail("expected header 'gid,value'");
  RegionVector v;
  std::unordered_map<std::string, int> seen;
  while (csv.next(cells)) {
    if (cells.size() != 2) csv.fail(fmt::format("expected 2 columns, found {}", cells.size()));
    if (cells[0].empty()) csv.fail("empty gid");
    if (auto [it, fresh] = seen.emplace(cells[0], csv.line()); !fresh) {
      throw DuplicateGid(fmt::format("{}:{}: duplicate gid '{}' (first on line {})", source, csv.line(), cells[0],
                                     it->second));
    }
    v.ids.push_back(cells[0]);
    v.values.push_back(csv.number(cells[1]));
  }
  return v;
}

RegionVector read_attributes(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_attributes(in, path.string());
}

void write_attributes(const std::filesystem::path& path, const RegionVector& v) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << "gid,value\n";
  for (std::size_t i = 0; i < v.size(); ++i) out << v.ids[i] << ',' << format_double(v.values[i]) << '\n';
}

CentroidTable parse_centroids(std::istream& in, const std::string& source) {
  CsvReader csv(in, source);
  std::vector<std::string> cells;
  if (!csv.next(cells)) csv.fail("empty file");
  CentroidTable t;
  if (cells == std::vector<std::string>{"gid", "x", "y"}) {
    t.metric = DistanceMetric::Planar;
  } else if (cells == std::vector<std::string>{"gid", "lon", "lat"}) {
    t.metric = DistanceMetric::Haversine;
  } else {
    csv.fail("expected header 'gid,x,y' or 'gid,lon,lat'");
  }
  std::unordered_map<std::string, int> seen;
  while (csv.next(cells)) {
    if (cells.size() != 3) csv.fail(fmt::format("expected 3 columns, found {}", cells.size()));
    if (!seen.emplace(cells[0], csv.line()).second) {
      throw DuplicateGid(fmt::format("{}:{}: duplicate gid '{}'", source, csv.line(), cells[0]));
    }
    const Centroid c{cells[0], csv.number(cells[1]), csv.number(cells[2])};
    if (t.metric == DistanceMetric::Haversine && (std::fabs(c.x) > 180.0 || std::fabs(c.y) > 90.0)) {
      csv.fail(fmt::format("coordinates ({}, {}) are not a longitude/latitude pair", c.x, c.y));
    }
    t.centroids.push_back(c);
  }
  return t;
}

CentroidTable read_centroids(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_centroids(in, path.string());
}

LabeledWeights parse_weights(std::istream& in, const std::string& source) {
  CsvReader csv(in, source);
  std::vector<std::string> cells;
  if (!csv.next(cells)) csv.fail("empty file");
  if (cells.size() < 2 || cells[0] != "gid") csv.fail("expected header 'gid,<id_1>,...,<id_n>'");
  LabeledWeights out;
  out.ids.assign(cells.begin() + 1, cells.end());
  const std::size_t n = out.ids.size();
  out.weights = WeightMatrix(n);
  std::size_t row = 0;
  while (csv.next(cells)) {
    if (row == n) csv.fail("more rows than header columns");
    if (cells.size() != n + 1) csv.fail(fmt::format("expected {} columns, found {}", n + 1, cells.size()));
    if (cells[0] != out.ids[row]) csv.fail(fmt::format("row gid '{}' does not match column '{}'", cells[0], out.ids[row]));
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = csv.number(cells[j + 1]);
      if (v < 0.0) csv.fail("negative weight");
      if (j == row && v != 0.0) csv.fail("nonzero diagonal weight");
      out.weights(row, j) = v;
      sum += v;
    }
    if (sum != 0.0 && std::fabs(sum - 1.0) > 0.01) {
      csv.fail(fmt::format("row sums to {}, not within 1% of 1", sum));
    }
    ++row;
  }
  if (row != n) csv.fail(fmt::format("expected {} rows, found {}", n, row));
  out.weights.row_normalize();
  return out;
}

LabeledWeights read_weights(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_weights(in, path.string());
}

void write_weights(const std::filesystem::path& path, const LabeledWeights& w) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << "gid";
  for (const auto& id : w.ids) out << ',' << id;
  out << '\n';
  for (std::size_t i = 0; i < w.ids.size(); ++i) {
    out << w.ids[i];
    for (std::size_t j = 0; j < w.ids.size(); ++j) out << ',' << format_double(w.weights(i, j));
    out << '\n';
  }
}

WeightMatrix align_weights(const LabeledWeights& w, const std::vector<std::string>& ids) {
  if (ids.size() != w.ids.size()) {
    throw DimensionError(fmt::format("weights cover {} regions, data has {}", w.ids.size(), ids.size()));
  }
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < w.ids.size(); ++i) index.emplace(w.ids[i], i);
  std::vector<std::size_t> from(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto it = index.find(ids[i]);
    if (it == index.end()) throw DimensionError(fmt::format("weights have no region '{}'", ids[i]));
    from[i] = it->second;
  }
  WeightMatrix out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = 0; j < ids.size(); ++j) out(i, j) = w.weights(from[i], from[j]);
  return out;
}

nlohmann::json read_geojson(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

nlohmann::ordered_json result_geojson(const MoranResult& result, const nlohmann::json* geometry) {
  std::map<std::string, nlohmann::json> geometry_by_gid;
  if (geometry) {
    const auto features = geometry->find("features");
    if (features == geometry->end() || !features->is_array()) throw GeometryMismatch("geometry input has no features array");
    for (const auto& f : *features) {
      const auto gid = gid_of(f);
      if (!gid.empty()) geometry_by_gid[gid] = f.value("geometry", nlohmann::json());
    }
    for (const auto& id : result.region_ids) {
      if (!geometry_by_gid.contains(id)) throw GeometryMismatch(fmt::format("no feature with gid '{}'", id));
    }
  }

  nlohmann::ordered_json doc;
  doc["type"] = "FeatureCollection";
  nlohmann::ordered_json summary;
  summary["regions"] = result.region_ids.size();
  summary["permutations"] = result.permutations;
  summary["alpha"] = result.alpha;
  if (result.global) {
    nlohmann::ordered_json g;
    g["interaction"] = result.global->interaction;
    g["moran_i"] = result.global->moran_i;
    if (const auto& s = result.global->significance) {
      g["p_value"] = s->p;
      g["greater"] = s->greater;
      g["lesser"] = s->lesser;
      g["pseudo_sd"] = s->pseudo_sd;
    }
    summary["global"] = g;
  }
  doc["moran"] = summary;

  auto features = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < result.region_ids.size(); ++i) {
    nlohmann::ordered_json f;
    f["type"] = "Feature";
    nlohmann::ordered_json props;
    props["gid"] = result.region_ids[i];
    if (const auto& l = result.local) {
      props["local_I"] = l->moran_i[i];
      if (!l->significance.empty()) props["p_value"] = l->significance[i].p;
      props["cluster"] = to_string(l->clusters[i]);
    }
    f["properties"] = props;
    f["geometry"] = geometry ? nlohmann::ordered_json(geometry_by_gid.at(result.region_ids[i])) : nullptr;
    features.push_back(std::move(f));
  }
  doc["features"] = std::move(features);
  return doc;
}

std::string format_report(const MoranResult& result) {
  std::string out;
  out += fmt::format("regions       {}\n", result.region_ids.size());
  out += fmt::format("permutations  {}\n", result.permutations);
  if (const auto& g = result.global) {
    out += fmt::format("global I      {:.8g}\n", g->moran_i);
    out += fmt::format("interaction   {}\n", format_double(g->interaction));
    if (const auto& s = g->significance) {
      out += fmt::format("p-value       {} (R={}, greater={}, lesser={})\n", format_double(s->p), s->r, s->greater,
                         s->lesser);
      out += fmt::format("pseudo SD     {}\n", format_double(s->pseudo_sd));
    }
  }
  if (const auto& l = result.local) {
    out += "gid,local_I,p_value,cluster\n";
    for (std::size_t i = 0; i < result.region_ids.size(); ++i) {
      const std::string p = l->significance.empty() ? "" : format_double(l->significance[i].p);
      out += fmt::format("{},{},{},{}\n", result.region_ids[i], format_double(l->moran_i[i]), p,
                         to_string(l->clusters[i]));
    }
  }
  return out;
}

ResultDocuments write_results(const MoranResult& result, const nlohmann::json* geometry) {
  return {result_geojson(result, geometry).dump(2) + "\n", format_report(result)};
}

}  // namespace geosmpc
