#include <csignal>
#include <iostream>
#include <pthread.h>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "common.hpp"
#include "geosmpc/errors.hpp"
#include "geosmpc/io.hpp"

namespace geosmpc::cli {

namespace {

struct PartyArgs {
  Role role = Role::Initiator;
  std::string proxy = "127.0.0.1:7700";
  std::string session = "default";
  std::string data;
  WeightSource source;
  std::string stat = "global";
  std::uint32_t k = 0;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  std::string fmt = "32,16";
  double latency_ms = 0.0;
  double timeout_s = 60.0;
  double rendezvous_s = 60.0;
  std::string ot_group = "ristretto";
  std::string geojson;
  std::string geometry;
  std::string report;
};

std::chrono::milliseconds seconds_to_ms(double s) {
  return std::chrono::milliseconds(static_cast<std::int64_t>(s * 1000.0));
}

int run_party(const PartyArgs& a) {
  const auto data = read_attributes(a.data);
  const auto w = a.source.load(data.ids);

  SessionConfig cfg;
  cfg.proxy_address = a.proxy;
  cfg.session_id = session_id_from_name(a.session);
  cfg.statistic = parse_statistic(a.stat);
  cfg.fmt = parse_format(a.fmt);
  cfg.permutations = a.k;
  cfg.seed = a.seed;
  cfg.alpha = a.alpha;
  cfg.latency_ms = a.latency_ms;
  cfg.phase_timeout = seconds_to_ms(a.timeout_s);
  cfg.rendezvous_timeout = seconds_to_ms(a.rendezvous_s);
  cfg.ot_group = a.ot_group == "toy" ? 2 : 1;
  SessionMetrics metrics;
  cfg.metrics = &metrics;

  MoranResult result;
  if (a.role == Role::Initiator) {
    result = run_initiator(cfg, data, w);
  } else {
    cfg.on_registered = [&] { std::cout << "registered " << a.session << std::endl; };
    result = run_receiver(cfg, data, w);
  }
  spdlog::info("{} finished: {} executions, {} frames sent, {} received, {:.3f} s", to_string(a.role),
               metrics.executions, metrics.frames_sent, metrics.frames_received, metrics.wall_seconds);

  std::optional<nlohmann::json> geometry;
  if (!a.geometry.empty()) geometry = read_geojson(a.geometry);
  const auto docs = write_results(result, geometry ? &*geometry : nullptr);
  std::cout << docs.report << std::flush;
  if (!a.geojson.empty()) write_text(a.geojson, docs.geojson);
  if (!a.report.empty()) write_text(a.report, docs.report);
  return kOk;
}

struct ProxyArgs {
  std::string listen = "127.0.0.1:7700";
  double handshake_s = 10.0;
  double relay_s = 600.0;
};

int run_proxy(const ProxyArgs& a) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ProxyOptions options;
  options.handshake_timeout = seconds_to_ms(a.handshake_s);
  options.relay_timeout = seconds_to_ms(a.relay_s);
  Proxy proxy(a.listen, options);
  const auto host = Endpoint::parse(a.listen).host;
  std::cout << "listening " << host << ":" << proxy.port() << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    spdlog::info("proxy stopping on signal {}", sig);
    proxy.stop();
  });
  proxy.serve();
  waiter.join();
  spdlog::info("proxy relayed {} sessions, {} protocol errors", proxy.sessions_completed(), proxy.protocol_errors());
  return kOk;
}

}  // namespace

void add_party(CLI::App& app, Role role, Action& action) {
  auto args = std::make_shared<PartyArgs>();
  args->role = role;
  const bool initiator = role == Role::Initiator;
  auto* cmd = app.add_subcommand(initiator ? "alice" : "bob",
                                 initiator ? "Run the initiator (garbler) with the x attribute"
                                           : "Run the receiver (evaluator) with the y attribute");
  cmd->add_option("--proxy", args->proxy, "Proxy address host:port")->envname("GEOSMPC_PROXY");
  cmd->add_option("--session", args->session, "Session name shared by both parties");
  cmd->add_option(initiator ? "--x" : "--y", args->data, "Attribute CSV (gid,value)")
      ->required()
      ->check(CLI::ExistingFile);
  args->source.add_options(*cmd);
  cmd->add_option("--stat", args->stat, "global or local")->check(CLI::IsMember({"global", "local"}));
  cmd->add_option("--k", args->k, "Permutations");
  cmd->add_option("--seed", args->seed, "Randomness seed")->envname("GEOSMPC_SEED");
  cmd->add_option("--alpha", args->alpha, "Significance level");
  cmd->add_option("--fmt", args->fmt, "Fixed-point format W,F");
  cmd->add_option("--latency", args->latency_ms, "Injected one-way latency per frame, ms")->check(CLI::NonNegativeNumber);
  cmd->add_option("--timeout", args->timeout_s, "Per-phase timeout, s")->check(CLI::PositiveNumber);
  cmd->add_option("--rendezvous-timeout", args->rendezvous_s, "How long to wait for the peer, s")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--ot-group", args->ot_group, "ristretto or toy")->check(CLI::IsMember({"ristretto", "toy"}));
  cmd->add_option("--geojson", args->geojson, "Write the result as GeoJSON");
  cmd->add_option("--geometry", args->geometry, "GeoJSON whose geometries are copied by gid")->check(CLI::ExistingFile);
  cmd->add_option("--report", args->report, "Write the text report");
  cmd->callback([args, &action] { action = [args] { return run_party(*args); }; });
}

void add_proxy(CLI::App& app, Action& action) {
  auto args = std::make_shared<ProxyArgs>();
  auto* cmd = app.add_subcommand("proxy", "Run the rendezvous and relay server");
  cmd->add_option("--listen", args->listen, "Listen address host:port (port 0 picks one)")->envname("GEOSMPC_LISTEN");
  cmd->add_option("--handshake-timeout", args->handshake_s, "s")->check(CLI::PositiveNumber);
  cmd->add_option("--relay-timeout", args->relay_s, "Idle limit of a relayed session, s")->check(CLI::PositiveNumber);
  cmd->callback([args, &action] { action = [args] { return run_proxy(*args); }; });
}

}  // namespace geosmpc::cli
