#include <algorithm>
#include <chrono>
#include <iostream>
#include <numeric>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "common.hpp"
#include "geosmpc/oracle.hpp"

namespace geosmpc::cli {

namespace {

struct BenchArgs {
  std::size_t n = 13;
  std::vector<double> latencies{0.4, 40.0};
  std::string stat = "global";
  std::uint32_t k = 0;
  std::size_t repeats = 1;
  std::uint64_t seed = 1;
  bool json = false;
};

struct Row {
  std::string mode;
  double latency_ms = 0.0;
  std::uint64_t round_trips = 0;
  std::vector<double> seconds;
};

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

int run_bench(const BenchArgs& a) {
  const auto stat = parse_statistic(a.stat);
  const auto data = synthetic_instance(a.n, a.seed);
  std::vector<Row> rows;

  for (const double latency : a.latencies) {
    // Plaintext: one party ships its column to the other, which computes.
    Row plain{"plaintext", latency, 1, {}};
    for (std::size_t r = 0; r < a.repeats; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      std::this_thread::sleep_for(std::chrono::microseconds(static_cast<std::int64_t>(latency * 1000.0)));
      OracleOptions opts;
      opts.permutations = a.k;
      opts.seed = a.seed;
      oracle_moran(stat, data.x, data.y, data.w, opts);
      plain.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    rows.push_back(plain);

    Row mpc{"mpc", latency, protocol_round_trips(stat, a.n, kDefaultFormat.total_bits, a.k), {}};
    for (std::size_t r = 0; r < a.repeats; ++r) {
      SessionConfig cfg;
      cfg.statistic = stat;
      cfg.permutations = a.k;
      cfg.seed = a.seed;
      cfg.latency_ms = latency;
      cfg.session_id = session_id_from_name(fmt::format("bench-{}-{}", latency, r));
      const auto run = run_local_pair(cfg, data.x, data.y, data.w);
      mpc.seconds.push_back(run.wall_seconds);
    }
    rows.push_back(mpc);
  }

  if (a.json) {
    for (const auto& row : rows) {
      for (std::size_t r = 0; r < row.seconds.size(); ++r) {
        nlohmann::ordered_json j = {{"type", "run"},          {"mode", row.mode},   {"latency_ms", row.latency_ms},
                                    {"statistic", a.stat},    {"n", a.n},           {"k", a.k},
                                    {"repeat", r},            {"wall_s", row.seconds[r]}};
        std::cout << j.dump() << '\n';
      }
      nlohmann::ordered_json s = {{"type", "summary"},
                                  {"mode", row.mode},
                                  {"latency_ms", row.latency_ms},
                                  {"statistic", a.stat},
                                  {"n", a.n},
                                  {"k", a.k},
                                  {"round_trips", row.round_trips},
                                  {"repeats", row.seconds.size()},
                                  {"mean_s", mean(row.seconds)},
                                  {"max_s", *std::max_element(row.seconds.begin(), row.seconds.end())}};
      std::cout << s.dump() << '\n';
    }
    return kOk;
  }

  std::cout << fmt::format("{:<10} {:>10} {:<9} {:>4} {:>4} {:>11} {:>7} {:>10} {:>10}\n", "mode", "latency_ms",
                           "statistic", "n", "K", "round_trips", "repeats", "mean_s", "max_s");
  for (const auto& row : rows) {
    std::cout << fmt::format("{:<10} {:>10} {:<9} {:>4} {:>4} {:>11} {:>7} {:>10.4f} {:>10.4f}\n", row.mode,
                             row.latency_ms, a.stat, a.n, a.k, row.round_trips, row.seconds.size(), mean(row.seconds),
                             *std::max_element(row.seconds.begin(), row.seconds.end()));
  }
  return kOk;
}

}  // namespace

void add_bench(CLI::App& app, Action& action) {
  auto args = std::make_shared<BenchArgs>();
  auto* cmd = app.add_subcommand("bench", "Time plaintext and MPC runs under injected latency");
  cmd->add_option("--n", args->n, "Regions (synthetic data)")->check(CLI::Range(3, 10000));
  cmd->add_option("--latency", args->latencies, "One-way latency in ms; repeatable")->check(CLI::NonNegativeNumber);
  cmd->add_option("--stat", args->stat, "global or local")->check(CLI::IsMember({"global", "local"}));
  cmd->add_option("--k", args->k, "Permutations");
  cmd->add_option("--repeats", args->repeats, "Runs per row")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", args->seed, "Data and randomness seed")->envname("GEOSMPC_SEED");
  cmd->callback([args, &app, &action] {
    args->json = app.get_option("--log-json")->as<bool>();
    action = [args] { return run_bench(*args); };
  });
}

}  // namespace geosmpc::cli
