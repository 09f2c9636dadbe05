#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "geosmpc/circuit_builder.hpp"
#include "geosmpc/esda.hpp"
#include "geosmpc/fixedpoint.hpp"
#include "geosmpc/session.hpp"
#include "geosmpc/spatial.hpp"

namespace geosmpc::cli {

/// Exit codes shared by all subcommands.
enum Exit : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kInput = 3,
  kConnection = 4,
  kProtocol = 5,
};

/// Work of the selected subcommand, run after parsing.
using Action = std::function<int()>;

/// "32,16" -> {32, 16}.
FixedPointFormat parse_format(const std::string& text);

struct WeightSource {
  std::string weights;
  std::string centroids;
  void add_options(CLI::App& app);
  /// Weights aligned to `ids`; throws RangeError when neither source was given.
  WeightMatrix load(const std::vector<std::string>& ids) const;
};

/// Synthetic inputs for commands that run without data files.
struct Synthetic {
  RegionVector x;
  RegionVector y;
  WeightMatrix w;
};
/// Regions on a circle with a seeded jitter and normally distributed values.
Synthetic synthetic_instance(std::size_t n, std::uint64_t seed);

void write_text(const std::string& path, const std::string& text);

void add_compile(CLI::App& app, Action& action);
void add_plaintext(CLI::App& app, Action& action);
void add_party(CLI::App& app, Role role, Action& action);
void add_proxy(CLI::App& app, Action& action);
void add_control(CLI::App& app, Action& action);
void add_bench(CLI::App& app, Action& action);

}  // namespace geosmpc::cli
