#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <string>

using namespace std::string_literals;

namespace {

const std::string cli = GEOSMPC_CLI;
const std::string data = GEOSMPC_DATA;

struct Result {
  int code = -1;
  std::string out;
};

Result sh(const std::string& command) {
  Result r;
  FILE* p = popen(command.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, got);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string tmpdir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("geosmpc-cli-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("compile reports the circuit shape") {
  const auto dir = tmpdir("compile");
  const auto g = sh(cli + " compile --stat global --n 13 --out " + dir + "/g.smc 2>&1");
  CHECK(g.code == 0);
  CHECK(g.out.find("input1 size   416 bit") != std::string::npos);
  CHECK(g.out.find("output1 size  32 bit") != std::string::npos);
  const auto l = sh(cli + " compile --stat local --n 13 --zip --out " + dir + "/l.smcz 2>&1");
  CHECK(l.code == 0);
  CHECK(l.out.find("output1 size  416 bit") != std::string::npos);

  CHECK(sh(cli + " compile --n 3 --out " + dir + "/a.smc").code == 0);
  CHECK(sh(cli + " compile --n 3 --out " + dir + "/b.smc").code == 0);
  CHECK(slurp(dir + "/a.smc") == slurp(dir + "/b.smc"));
  CHECK(sh(cli + " compile --weights " + data + "/sym3/weights.csv --out " + dir + "/w.smc").code == 0);
}

TEST_CASE("plaintext on the symmetric fixture") {
  const auto cmd = cli + " plaintext --x " + data + "/sym3/x.csv --y " + data + "/sym3/y.csv --weights " + data +
                   "/sym3/weights.csv --k 99 --seed 1 2>/dev/null";
  const auto a = sh(cmd);
  CHECK(a.code == 0);
  CHECK(a.out.find("global I      -0.5\n") != std::string::npos);
  CHECK(a.out.find("1,-0.5,") != std::string::npos);
  CHECK(sh(cmd).out == a.out);
}

TEST_CASE("plaintext float and fixed agree within the accuracy bound") {
  const auto dir = tmpdir("plain13");
  const auto r = sh(cli + " plaintext --x " + data + "/ring13/x.csv --y " + data + "/ring13/y.csv --centroids " +
                    data + "/ring13/centroids.csv --geojson " + dir + "/out.geojson 2>/dev/null");
  REQUIRE(r.code == 0);
  std::smatch m;
  REQUIRE(std::regex_search(r.out, m, std::regex(R"(\[difference float - fixed\]\nglobal I +(\S+)\nlocal I max +(\S+))")));
  CHECK(std::abs(std::stod(m[1])) <= 0.008);
  CHECK(std::stod(m[2]) <= 0.008);
  CHECK(slurp(dir + "/out.geojson").find("FeatureCollection") != std::string::npos);
}

TEST_CASE("three processes: proxy, bob, alice") {
  const auto dir = tmpdir("three");
  const auto d = data + "/ring13";
  const std::string common = " --session t3 --centroids " + d + "/centroids.csv --stat local --k 2 --seed 4";
  const std::string script =
      "cd " + dir + "; " + cli + " proxy --listen 127.0.0.1:0 > proxy.out 2> proxy.err & PROXY=$!; " +
      "for i in $(seq 100); do grep -q listening " + dir + "/proxy.out && break; sleep 0.05; done; " +
      "ADDR=$(cut -d' ' -f2 " + dir + "/proxy.out); " + cli + " bob --proxy $ADDR --y " + d + "/y.csv" + common +
      " > bob.out 2> bob.err & BOB=$!; " + "for i in $(seq 100); do grep -q registered " + dir +
      "/bob.out && break; sleep 0.05; done; " + cli + " alice --proxy $ADDR --x " + d + "/x.csv" + common +
      " > alice.out 2> alice.err; A=$?; wait $BOB; B=$?; kill $PROXY; wait $PROXY; echo $A $B";
  std::ofstream(dir + "/run.sh") << script << "\n";
  const auto r = sh("sh " + dir + "/run.sh");
  CHECK(r.out == "0 0\n");
  const auto alice = slurp(dir + "/alice.out");
  auto bob = slurp(dir + "/bob.out");
  REQUIRE(bob.rfind("registered t3\n", 0) == 0);
  bob = bob.substr(std::string("registered t3\n").size());
  CHECK(alice == bob);
  CHECK(alice.find("gid,local_I,p_value,cluster") != std::string::npos);
}

TEST_CASE("alice without a proxy fails with a connection error") {
  const auto r = sh(cli + " alice --proxy 127.0.0.1:1 --x " + data + "/sym3/x.csv --weights " + data +
                    "/sym3/weights.csv 2>&1");
  CHECK(r.code == 4);
  CHECK(r.out.find("connection error") != std::string::npos);
}

TEST_CASE("control dispatches the receiver before the initiator") {
  const auto dir = tmpdir("control");
  std::ofstream(dir + "/meta.toml") << "proxy = \"127.0.0.1:0\"\n"
                                    << "spawn_proxy = true\n"
                                    << "session = \"ctl\"\n"
                                    << "statistic = \"global\"\n"
                                    << "permutations = 1\n"
                                    << "weights = \"" << data << "/sym3/weights.csv\"\n"
                                    << "out_dir = \"results\"\n\n"
                                    << "[datasets.first]\nrole = \"initiator\"\nfile = \"" << data << "/sym3/x.csv\"\n\n"
                                    << "[datasets.second]\nrole = \"receiver\"\nfile = \"" << data << "/sym3/y.csv\"\n";
  const auto r = sh(cli + " control " + dir + "/meta.toml 2>/dev/null");
  CHECK(r.code == 0);
  const auto dispatch_receiver = r.out.find("dispatch receiver second");
  const auto registered = r.out.find("receiver second registered");
  const auto dispatch_initiator = r.out.find("dispatch initiator first");
  REQUIRE(dispatch_receiver != std::string::npos);
  REQUIRE(registered != std::string::npos);
  REQUIRE(dispatch_initiator != std::string::npos);
  CHECK(dispatch_receiver < registered);
  CHECK(registered < dispatch_initiator);
  CHECK(slurp(dir + "/results/first.txt") == slurp(dir + "/results/second.txt"));
  CHECK(slurp(dir + "/results/first.txt").find("global I      -0.50000509") != std::string::npos);

  std::ofstream(dir + "/bad.toml") << "[datasets.only]\nrole = \"initiator\"\nfile = \"x.csv\"\n";
  CHECK(sh(cli + " control " + dir + "/bad.toml 2>/dev/null").code == 3);
}

TEST_CASE("bench reports mean and max per row") {
  const auto r = sh(cli + " --log-level warn bench --n 13 --latency 0 --repeats 3 2>&1");
  REQUIRE(r.code == 0);
  std::smatch m;
  REQUIRE(std::regex_search(r.out, m, std::regex(R"(plaintext +0 global +13 +0 +1 +3 +(\S+) +(\S+))")));
  CHECK(std::stod(m[2]) < 1.0);
  CHECK(std::regex_search(r.out, std::regex(R"(mpc +0 global +13 +0 +628 +3 )")));
  const auto j = sh(cli + " --log-level warn --log-json bench --n 3 --latency 0 --repeats 2");
  CHECK(j.out.find(R"("type":"summary","mode":"mpc")") != std::string::npos);
  CHECK(j.out.find(R"("repeats":2)") != std::string::npos);
}

TEST_CASE("usage errors, environment and config files") {
  CHECK(sh(cli + " 2>/dev/null").code == 2);
  CHECK(sh(cli + " compile --stat sideways 2>/dev/null").code == 2);
  CHECK(sh(cli + " alice --x /nonexistent 2>/dev/null").code == 2);
  CHECK(sh("GEOSMPC_PROXY=127.0.0.1:1 " + cli + " alice --x " + data + "/sym3/x.csv --weights " + data +
           "/sym3/weights.csv 2>&1")
            .out.find("127.0.0.1:1") != std::string::npos);

  const auto dir = tmpdir("config");
  std::ofstream(dir + "/c.toml") << "[compile]\nn = 4\nout = \"" << dir << "/from-config.smc\"\n";
  const auto r = sh(cli + " --config " + dir + "/c.toml compile --n 5 2>&1");
  CHECK(r.code == 0);
  CHECK(r.out.find("input1 size   160 bit") != std::string::npos);
  CHECK(std::filesystem::exists(dir + "/from-config.smc"));
}
