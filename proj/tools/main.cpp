#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "common.hpp"
#include "geosmpc/errors.hpp"

using namespace geosmpc;
using namespace geosmpc::cli;

int main(int argc, char** argv) {
  CLI::App app{"Two-party secure computation of bivariate Moran's I"};
  app.name("geosmpc");
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML file with option defaults; [alice], [bob], ... sections per subcommand");
  std::string level = "info";
  app.add_option("--log-level", level, "trace, debug, info, warn, error or off");
  app.add_flag("--log-json", "Machine-readable log lines (and bench records)");

  Action action;
  add_compile(app, action);
  add_plaintext(app, action);
  add_party(app, Role::Initiator, action);
  add_party(app, Role::Receiver, action);
  add_proxy(app, action);
  add_control(app, action);
  add_bench(app, action);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  auto logger = spdlog::stderr_color_mt("geosmpc");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(level));
  if (app.get_option("--log-json")->as<bool>()) {
    spdlog::set_pattern(R"({"time":"%Y-%m-%dT%H:%M:%S.%e","level":"%l","pid":%P,"message":"%v"})");
  } else {
    spdlog::set_pattern("[%H:%M:%S.%e] [%l] %v");
  }

  try {
    return action ? action() : kUsage;
  } catch (const ConnectionError& e) {
    spdlog::error("connection error: {}", e.what());
    return kConnection;
  } catch (const NoPeerWaiting& e) {
    spdlog::error("no peer: {}", e.what());
    return kConnection;
  } catch (const Timeout& e) {
    spdlog::error("timeout: {}", e.what());
    return kConnection;
  } catch (const ProtocolError& e) {
    spdlog::error("protocol error: {}", e.what());
    return kProtocol;
  } catch (const PeerVersionMismatch& e) {
    spdlog::error("version mismatch: {}", e.what());
    return kProtocol;
  } catch (const CircuitHashMismatch& e) {
    spdlog::error("circuit mismatch: {}", e.what());
    return kProtocol;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return kInput;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailure;
  }
}
