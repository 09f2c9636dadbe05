#include <chrono>
#include <iostream>
#include <map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "common.hpp"
#include "geosmpc/circuit.hpp"
#include "geosmpc/errors.hpp"
#include "geosmpc/io.hpp"
#include "geosmpc/oracle.hpp"

namespace geosmpc::cli {

namespace {

struct CompileArgs {
  std::string stat = "global";
  std::size_t n = 13;
  std::string fmt = "32,16";
  WeightSource source;
  std::string out;
  bool zip = false;
  std::uint64_t seed = 0;
};

int run_compile(const CompileArgs& a) {
  const auto stat = parse_statistic(a.stat);
  const auto fmt = parse_format(a.fmt);
  WeightMatrix w;
  if (!a.source.weights.empty()) {
    w = read_weights(a.source.weights).weights;
  } else if (!a.source.centroids.empty()) {
    const auto table = read_centroids(a.source.centroids);
    w = build_weights(table.centroids, table.metric);
  } else {
    w = synthetic_instance(a.n, a.seed).w;
  }

  const auto t0 = std::chrono::steady_clock::now();
  const Circuit c = build_moran_circuit(stat, w, fmt);
  const double compile_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  auto stats = circuit_stats(c, true);
  stats.compile_seconds = compile_s;
  const std::string out = a.out.empty() ? fmt::format("moran_{}_n{}.smc", a.stat, w.size()) : a.out;
  write_circuit_file(out, c, a.zip);
  std::cout << format_stats_block(stats);
  std::cout << fmt::format("written       {}\n", out);
  return kOk;
}

struct PlaintextArgs {
  std::string x;
  std::string y;
  WeightSource source;
  std::string stat = "both";
  std::uint32_t k = 0;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  std::string fmt = "32,16";
  std::string geojson;
  std::string geometry;
  std::string report;
};

RegionVector reorder_like(const RegionVector& v, const std::vector<std::string>& ids) {
  if (v.ids == ids) return v;
  std::map<std::string, double> by_id;
  for (std::size_t i = 0; i < v.size(); ++i) by_id.emplace(v.ids[i], v.values[i]);
  RegionVector out;
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw DimensionError(fmt::format("region '{}' missing from the second attribute file", id));
    out.ids.push_back(id);
    out.values.push_back(it->second);
  }
  if (by_id.size() != ids.size()) throw DimensionError("attribute files list different regions");
  return out;
}

MoranResult run_oracles(const std::string& which, const RegionVector& x, const RegionVector& y, const WeightMatrix& w,
                        const OracleOptions& opts) {
  MoranResult merged;
  if (which == "global" || which == "both") merged = oracle_moran(Statistic::Global, x, y, w, opts);
  if (which == "local" || which == "both") {
    auto local = oracle_moran(Statistic::Local, x, y, w, opts);
    merged.region_ids = local.region_ids;
    merged.permutations = local.permutations;
    merged.alpha = local.alpha;
    merged.local = std::move(local.local);
  }
  return merged;
}

int run_plaintext(const PlaintextArgs& a) {
  if (a.stat != "global" && a.stat != "local" && a.stat != "both") {
    throw RangeError(fmt::format("unknown statistic '{}'", a.stat));
  }
  const auto x = read_attributes(a.x);
  const auto y = reorder_like(read_attributes(a.y), x.ids);
  const auto w = a.source.load(x.ids);

  OracleOptions opts;
  opts.fmt = parse_format(a.fmt);
  opts.permutations = a.k;
  opts.seed = a.seed;
  opts.alpha = a.alpha;
  const auto t0 = std::chrono::steady_clock::now();
  opts.mode = OracleMode::Float;
  const auto exact = run_oracles(a.stat, x, y, w, opts);
  opts.mode = OracleMode::Fixed;
  const auto fixed = run_oracles(a.stat, x, y, w, opts);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::cout << "[float]\n" << format_report(exact) << "\n[fixed " << a.fmt << "]\n" << format_report(fixed);
  std::cout << "\n[difference float - fixed]\n";
  if (exact.global) {
    std::cout << fmt::format("global I      {}\n", format_double(exact.global->moran_i - fixed.global->moran_i));
  }
  if (exact.local) {
    const auto acc = accuracy_report(exact.local->moran_i, fixed.local->moran_i);
    std::cout << fmt::format("local I max   {}\n", format_double(acc.max_abs));
  }
  spdlog::info("plaintext pipeline took {:.3f} s", seconds);

  std::optional<nlohmann::json> geometry;
  if (!a.geometry.empty()) geometry = read_geojson(a.geometry);
  const auto docs = write_results(exact, geometry ? &*geometry : nullptr);
  if (!a.geojson.empty()) write_text(a.geojson, docs.geojson);
  if (!a.report.empty()) write_text(a.report, docs.report);
  return kOk;
}

}  // namespace

void add_compile(CLI::App& app, Action& action) {
  auto args = std::make_shared<CompileArgs>();
  auto* cmd = app.add_subcommand("compile", "Build a Moran circuit and print its statistics");
  cmd->add_option("--stat", args->stat, "global or local")->check(CLI::IsMember({"global", "local"}));
  cmd->add_option("--n", args->n, "Regions when no weights are given (synthetic ring layout)")->check(CLI::Range(3, 100000));
  cmd->add_option("--fmt", args->fmt, "Fixed-point format W,F");
  args->source.add_options(*cmd);
  cmd->add_option("--out", args->out, "Circuit file to write");
  cmd->add_flag("--zip", args->zip, "Write the zlib-compressed container");
  cmd->add_option("--seed", args->seed, "Seed of the synthetic layout");
  cmd->callback([args, &action] { action = [args] { return run_compile(*args); }; });
}

void add_plaintext(CLI::App& app, Action& action) {
  auto args = std::make_shared<PlaintextArgs>();
  auto* cmd = app.add_subcommand("plaintext", "Run the float and fixed-point pipelines without MPC");
  cmd->add_option("--x", args->x, "Initiator attribute CSV")->required()->check(CLI::ExistingFile);
  cmd->add_option("--y", args->y, "Receiver attribute CSV")->required()->check(CLI::ExistingFile);
  args->source.add_options(*cmd);
  cmd->add_option("--stat", args->stat, "global, local or both");
  cmd->add_option("--k", args->k, "Permutations");
  cmd->add_option("--seed", args->seed, "Permutation seed")->envname("GEOSMPC_SEED");
  cmd->add_option("--alpha", args->alpha, "Significance level");
  cmd->add_option("--fmt", args->fmt, "Fixed-point format W,F");
  cmd->add_option("--geojson", args->geojson, "Write the float result as GeoJSON");
  cmd->add_option("--geometry", args->geometry, "GeoJSON whose geometries are copied by gid")->check(CLI::ExistingFile);
  cmd->add_option("--report", args->report, "Write the float report");
  cmd->callback([args, &action] { action = [args] { return run_plaintext(*args); }; });
}

}  // namespace geosmpc::cli
