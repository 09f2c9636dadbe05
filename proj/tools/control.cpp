#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "common.hpp"
#include "geosmpc/errors.hpp"

extern char** environ;

namespace geosmpc::cli {

namespace {

namespace fs = std::filesystem;

struct Dataset {
  std::string name;
  std::string role;
  std::string file;
  std::string endpoint;
};

struct Metadata {
  std::string proxy = "127.0.0.1:7700";
  bool spawn_proxy = false;
  std::string session = "default";
  std::string statistic = "global";
  std::string permutations = "0";
  std::string seed = "0";
  std::string alpha = "0.05";
  std::string fmt = "32,16";
  std::string latency_ms = "0";
  std::string weights;
  std::string centroids;
  std::string out_dir = ".";
  std::vector<Dataset> datasets;
};

std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

Metadata read_metadata(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot open {}", path));
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error& e) {
    throw ParseError(fmt::format("{}: {}", path, e.what()));
  }

  Metadata m;
  std::map<std::string, std::string*> globals = {
      {"proxy", &m.proxy},         {"session", &m.session},       {"statistic", &m.statistic},
      {"permutations", &m.permutations}, {"seed", &m.seed},       {"alpha", &m.alpha},
      {"fmt", &m.fmt},             {"latency_ms", &m.latency_ms}, {"weights", &m.weights},
      {"centroids", &m.centroids}, {"out_dir", &m.out_dir},
  };
  std::map<std::string, Dataset> datasets;
  std::vector<std::string> order;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    const std::string value = item.inputs.empty() ? "" : item.inputs.front();
    if (item.parents.empty()) {
      if (item.name == "spawn_proxy") {
        m.spawn_proxy = value == "true";
        continue;
      }
      const auto it = globals.find(item.name);
      if (it == globals.end()) throw ParseError(fmt::format("{}: unknown key '{}'", path, item.name));
      *it->second = value;
    } else if (item.parents.size() == 2 && item.parents[0] == "datasets") {
      const auto& name = item.parents[1];
      if (!datasets.contains(name)) order.push_back(name);
      auto& d = datasets[name];
      d.name = name;
      if (item.name == "role") {
        d.role = value;
      } else if (item.name == "file") {
        d.file = value;
      } else if (item.name == "endpoint") {
        d.endpoint = value;
      } else {
        throw ParseError(fmt::format("{}: unknown key '{}'", path, item.fullname()));
      }
    } else {
      throw ParseError(fmt::format("{}: unexpected entry '{}'", path, item.fullname()));
    }
  }

  const fs::path base = fs::path(path).parent_path();
  m.weights = resolve(base, m.weights);
  m.centroids = resolve(base, m.centroids);
  m.out_dir = resolve(base, m.out_dir);
  for (const auto& name : order) {
    auto d = datasets.at(name);
    if (d.role != "initiator" && d.role != "receiver") {
      throw ParseError(fmt::format("{}: dataset '{}' needs role = \"initiator\" or \"receiver\"", path, name));
    }
    if (d.file.empty()) throw ParseError(fmt::format("{}: dataset '{}' has no file", path, name));
    d.file = resolve(base, d.file);
    m.datasets.push_back(d);
  }
  return m;
}

struct Child {
  std::string name;
  pid_t pid = -1;
  FILE* out = nullptr;
};

Child spawn_child(const std::string& name, const std::vector<std::string>& args) {
  int fds[2];
  if (pipe(fds) != 0) throw std::system_error(errno, std::generic_category(), "pipe");
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&actions, fds[0]);
  posix_spawn_file_actions_addclose(&actions, fds[1]);

  std::vector<char*> argv;
  std::string program = "geosmpc";
  argv.push_back(program.data());
  std::vector<std::string> copy = args;
  for (auto& a : copy) argv.push_back(a.data());
  argv.push_back(nullptr);

  Child c;
  c.name = name;
  const int rc = posix_spawn(&c.pid, "/proc/self/exe", &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  close(fds[1]);
  if (rc != 0) {
    close(fds[0]);
    throw std::system_error(rc, std::generic_category(), "posix_spawn");
  }
  c.out = fdopen(fds[0], "r");
  return c;
}

std::optional<std::string> read_line(FILE* f) {
  char* line = nullptr;
  size_t cap = 0;
  const auto len = getline(&line, &cap, f);
  std::optional<std::string> out;
  if (len >= 0) {
    out = std::string(line, static_cast<std::size_t>(len));
    if (!out->empty() && out->back() == '\n') out->pop_back();
  }
  free(line);
  return out;
}

std::mutex echo_mu;

void echo(const std::string& name, const std::string& line) {
  std::lock_guard lk(echo_mu);
  std::cout << "[" << name << "] " << line << '\n' << std::flush;
}

std::thread echo_rest(Child& c) {
  return std::thread([&c] {
    while (auto line = read_line(c.out)) echo(c.name, *line);
    fclose(c.out);
    c.out = nullptr;
  });
}

int wait_child(const Child& c) {
  int status = 0;
  if (waitpid(c.pid, &status, 0) < 0) return kFailure;
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return kFailure;
}

std::vector<std::string> party_args(const Metadata& m, const Dataset& d, const std::string& proxy) {
  const bool initiator = d.role == "initiator";
  std::vector<std::string> a = {initiator ? "alice" : "bob",
                                "--proxy", d.endpoint.empty() ? proxy : d.endpoint,
                                "--session", m.session,
                                initiator ? "--x" : "--y", d.file,
                                "--stat", m.statistic,
                                "--k", m.permutations,
                                "--seed", m.seed,
                                "--alpha", m.alpha,
                                "--fmt", m.fmt,
                                "--latency", m.latency_ms,
                                "--geojson", (fs::path(m.out_dir) / (d.name + ".geojson")).string(),
                                "--report", (fs::path(m.out_dir) / (d.name + ".txt")).string()};
  if (!m.weights.empty()) {
    a.insert(a.end(), {"--weights", m.weights});
  } else {
    a.insert(a.end(), {"--centroids", m.centroids});
  }
  return a;
}

int run_control(const std::string& config_path) {
  const Metadata m = read_metadata(config_path);
  const Dataset* initiator = nullptr;
  const Dataset* receiver = nullptr;
  for (const auto& d : m.datasets) {
    auto& slot = d.role == "initiator" ? initiator : receiver;
    if (slot) throw ParseError(fmt::format("{}: more than one {} dataset", config_path, d.role));
    slot = &d;
  }
  if (!initiator || !receiver) throw ParseError(fmt::format("{}: needs one initiator and one receiver dataset", config_path));
  if (m.weights.empty() == m.centroids.empty()) {
    throw ParseError(fmt::format("{}: set exactly one of weights and centroids", config_path));
  }
  fs::create_directories(m.out_dir);

  std::string proxy_address = m.proxy;
  std::optional<Child> proxy;
  std::thread proxy_echo;
  if (m.spawn_proxy) {
    proxy = spawn_child("proxy", {"proxy", "--listen", m.proxy});
    const auto line = read_line(proxy->out);
    if (!line || !line->starts_with("listening ")) {
      wait_child(*proxy);
      throw ConnectionError("the proxy did not start");
    }
    proxy_address = line->substr(std::string("listening ").size());
    echo("control", "proxy listening on " + proxy_address);
    proxy_echo = echo_rest(*proxy);
  }
  auto stop_proxy = [&] {
    if (!proxy) return;
    kill(proxy->pid, SIGTERM);
    wait_child(*proxy);
    proxy_echo.join();
  };

  echo("control", fmt::format("dispatch receiver {}", receiver->name));
  Child bob = spawn_child(receiver->name, party_args(m, *receiver, proxy_address));
  bool registered = false;
  while (auto line = read_line(bob.out)) {
    echo(bob.name, *line);
    if (line->starts_with("registered")) {
      registered = true;
      break;
    }
  }
  if (!registered) {
    const int code = wait_child(bob);
    fclose(bob.out);
    stop_proxy();
    echo("control", fmt::format("receiver {} exited with {} before registering", receiver->name, code));
    return code == 0 ? kFailure : code;
  }
  echo("control", fmt::format("receiver {} registered", receiver->name));
  auto bob_echo = echo_rest(bob);

  echo("control", fmt::format("dispatch initiator {}", initiator->name));
  Child alice = spawn_child(initiator->name, party_args(m, *initiator, proxy_address));
  auto alice_echo = echo_rest(alice);

  const int alice_code = wait_child(alice);
  alice_echo.join();
  const int bob_code = wait_child(bob);
  bob_echo.join();
  stop_proxy();
  echo("control", fmt::format("initiator {} exit {}, receiver {} exit {}", initiator->name, alice_code,
                              receiver->name, bob_code));
  if (alice_code != 0) return alice_code;
  return bob_code;
}

}  // namespace

void add_control(CLI::App& app, Action& action) {
  auto path = std::make_shared<std::string>();
  auto* cmd = app.add_subcommand("control", "Launch receiver then initiator from a metadata file");
  cmd->add_option("metadata", *path, "Metadata TOML file")->required()->check(CLI::ExistingFile);
  cmd->callback([path, &action] { action = [path] { return run_control(*path); }; });
}

}  // namespace geosmpc::cli
