#include <doctest.h>

#include <future>

#include "geosmpc/errors.hpp"
#include "geosmpc/oracle.hpp"
#include "support/fixtures.hpp"

using namespace geosmpc;
using namespace geosmpc::testing;
using namespace std::chrono_literals;

namespace {

std::string address(const Proxy& p) { return "127.0.0.1:" + std::to_string(p.port()); }

struct PairOutcome {
  std::optional<MoranResult> initiator, receiver;
  std::exception_ptr initiator_error, receiver_error;
};

/// Receiver started first and awaited until registered, unless `initiator_first`.
PairOutcome run_pair(const Instance& inst, SessionConfig alice, SessionConfig bob, const WeightMatrix& bob_w,
                     bool initiator_first = false) {
  PairOutcome out;
  std::promise<void> registered;
  auto ready = registered.get_future();
  bob.on_registered = [&] { registered.set_value(); };
  auto bob_task = [&] {
    try {
      out.receiver = run_receiver(bob, inst.y, bob_w);
    } catch (...) {
      out.receiver_error = std::current_exception();
    }
  };
  auto alice_task = [&] {
    try {
      out.initiator = run_initiator(alice, inst.x, inst.w);
    } catch (...) {
      out.initiator_error = std::current_exception();
    }
  };
  if (initiator_first) {
    std::thread a(alice_task);
    std::this_thread::sleep_for(300ms);
    std::thread b(bob_task);
    a.join();
    b.join();
  } else {
    std::thread b(bob_task);
    ready.wait_for(10s);
    alice_task();
    b.join();
  }
  return out;
}

template <typename E>
bool holds(std::exception_ptr p) {
  if (!p) return false;
  try {
    std::rethrow_exception(p);
  } catch (const E&) {
    return true;
  } catch (...) {
    return false;
  }
}

SessionConfig quick(const std::string& proxy, const std::string& name) {
  SessionConfig cfg;
  cfg.proxy_address = proxy;
  cfg.session_id = session_id_from_name(name);
  cfg.phase_timeout = 20s;
  cfg.rendezvous_timeout = 10s;
  return cfg;
}

}  // namespace

TEST_CASE("symmetric three regions through a loopback session") {
  SessionConfig cfg;
  cfg.session_id = session_id_from_name("sym3");
  const auto run = run_loopback(symmetric_three(), cfg);
  REQUIRE(run.initiator.global);
  CHECK(std::abs(run.initiator.global->moran_i + 0.5) <= std::ldexp(1.0, -10));
  CHECK(run.initiator == run.receiver);

  cfg.statistic = Statistic::Local;
  const auto local = run_loopback(symmetric_three(), cfg);
  const auto& li = local.initiator.local->moran_i;
  CHECK(std::abs(li[0] + 0.5) <= std::ldexp(1.0, -10));
  CHECK(std::abs(li[1]) <= std::ldexp(1.0, -10));
  CHECK(std::abs(li[2] + 0.5) <= std::ldexp(1.0, -10));
}

TEST_CASE("n = 13 session equals the fixed-point oracle bit for bit") {
  const auto inst = random_instance(13, 7);
  for (const auto stat : {Statistic::Global, Statistic::Local}) {
    SessionConfig cfg;
    cfg.statistic = stat;
    cfg.permutations = 3;
    cfg.seed = 11;
    cfg.session_id = session_id_from_name(std::string("n13-") + to_string(stat));
    const auto run = run_loopback(inst, cfg);
    OracleOptions opts;
    opts.mode = OracleMode::Fixed;
    opts.permutations = 3;
    opts.seed = 11;
    const auto expected = oracle_moran(stat, inst.x, inst.y, inst.w, opts);
    CHECK(run.initiator == expected);
    CHECK(run.receiver == expected);
    // Rendezvous adds CONNECT_REQUEST and ACCEPT.
    CHECK(run.initiator_metrics.frames_sent + run.initiator_metrics.frames_received ==
          protocol_frame_count(stat, 13, 32, 3) + 2);
    CHECK(run.initiator_metrics.round_trips == protocol_frame_count(stat, 13, 32, 3) / 2);
  }
}

TEST_CASE("the toy OT group also completes a session") {
  SessionConfig cfg;
  cfg.ot_group = 2;
  cfg.session_id = session_id_from_name("toy");
  const auto inst = random_instance(4, 3);
  const auto run = run_loopback(inst, cfg);
  OracleOptions opts;
  opts.mode = OracleMode::Fixed;
  CHECK(run.initiator == oracle_moran(Statistic::Global, inst.x, inst.y, inst.w, opts));
}

TEST_CASE("two concurrent sessions through one proxy") {
  Proxy proxy("127.0.0.1:0");
  proxy.start();
  const auto i1 = random_instance(3, 40), i2 = random_instance(4, 41);
  PairOutcome o1, o2;
  std::thread t1([&] { o1 = run_pair(i1, quick(address(proxy), "one"), quick(address(proxy), "one"), i1.w); });
  std::thread t2([&] { o2 = run_pair(i2, quick(address(proxy), "two"), quick(address(proxy), "two"), i2.w); });
  t1.join();
  t2.join();
  proxy.stop();
  REQUIRE(o1.initiator);
  REQUIRE(o2.initiator);
  CHECK(*o1.initiator == *o1.receiver);
  CHECK(*o2.initiator == *o2.receiver);
  CHECK(o1.initiator->region_ids.size() == 3);
  CHECK(o2.initiator->region_ids.size() == 4);
  CHECK(proxy.sessions_completed() == 2);
}

TEST_CASE("an initiator that arrives first retries until the receiver registers") {
  Proxy proxy("127.0.0.1:0");
  proxy.start();
  const auto inst = random_instance(3, 42);
  const auto out = run_pair(inst, quick(address(proxy), "late"), quick(address(proxy), "late"), inst.w, true);
  proxy.stop();
  CHECK(!out.initiator_error);
  CHECK(!out.receiver_error);
  REQUIRE(out.initiator);
  CHECK(*out.initiator == *out.receiver);
}

TEST_CASE("no receiver at all ends in NoPeerWaiting") {
  Proxy proxy("127.0.0.1:0");
  proxy.start();
  auto cfg = quick(address(proxy), "lonely");
  cfg.rendezvous_timeout = 300ms;
  const auto inst = random_instance(3, 43);
  CHECK_THROWS_AS(run_initiator(cfg, inst.x, inst.w), NoPeerWaiting);
  proxy.stop();
}

TEST_CASE("no proxy gives a connection error") {
  Listener placeholder(Endpoint::parse("127.0.0.1:0"));
  const auto port = placeholder.port();
  placeholder.shutdown();
  const auto inst = random_instance(3, 44);
  CHECK_THROWS_AS(run_initiator(quick("127.0.0.1:" + std::to_string(port), "x"), inst.x, inst.w), ConnectionError);
}

TEST_CASE("malformed frames close the connection and are counted") {
  Proxy proxy("127.0.0.1:0");
  proxy.start();
  Socket s = Socket::connect(Endpoint{"127.0.0.1", proxy.port()});
  std::vector<std::uint8_t> junk(kFrameHeaderSize, 0);
  junk[4] = 0x55;
  s.send_all(junk);
  s.set_timeout(5s);
  std::uint8_t byte = 0;
  CHECK_THROWS_AS(s.recv_exact(std::span(&byte, 1)), ConnectionError);
  for (int i = 0; i < 50 && proxy.protocol_errors() == 0; ++i) std::this_thread::sleep_for(10ms);
  CHECK(proxy.protocol_errors() == 1);
  proxy.stop();
}

TEST_CASE("duplicate registrations are rejected") {
  Proxy proxy("127.0.0.1:0");
  proxy.start();
  const auto id = session_id_from_name("dup");
  Channel first(Socket::connect(Endpoint{"127.0.0.1", proxy.port()}), {});
  first.send(FrameType::Register, id);
  CHECK(first.recv().type == FrameType::Registered);
  Channel second(Socket::connect(Endpoint{"127.0.0.1", proxy.port()}), {});
  second.send(FrameType::Register, id);
  CHECK(second.recv().type == FrameType::Error);
  proxy.stop();
}

TEST_CASE("parties with different weights detect the circuit mismatch") {
  Proxy proxy("127.0.0.1:0");
  proxy.start();
  const auto inst = random_instance(4, 45);
  const auto other = random_instance(4, 46);
  const auto out = run_pair(inst, quick(address(proxy), "hash"), quick(address(proxy), "hash"), other.w);
  proxy.stop();
  CHECK(holds<CircuitHashMismatch>(out.initiator_error));
  CHECK(holds<CircuitHashMismatch>(out.receiver_error));
}

TEST_CASE("parties with different parameters stop at the handshake") {
  Proxy proxy("127.0.0.1:0");
  proxy.start();
  const auto inst = random_instance(4, 47);
  auto alice = quick(address(proxy), "params");
  auto bob = alice;
  bob.permutations = 5;
  const auto out = run_pair(inst, alice, bob, inst.w);
  proxy.stop();
  CHECK(holds<ProtocolError>(out.initiator_error));
  CHECK(holds<ProtocolError>(out.receiver_error));
}

TEST_CASE("injected latency bounds the wall time from below") {
  SessionConfig cfg;
  cfg.latency_ms = 40;
  cfg.session_id = session_id_from_name("slow");
  const auto inst = random_instance(3, 48);
  const auto t0 = std::chrono::steady_clock::now();
  const auto run = run_loopback(inst, cfg);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto trips = protocol_round_trips(Statistic::Global, 3, 32, 0);
  CHECK(trips == run.initiator_metrics.round_trips);
  CHECK(wall >= static_cast<double>(trips) * 0.080);
}

TEST_CASE("frame count is a function of statistic, n, width and K") {
  CHECK(protocol_frame_count(Statistic::Global, 13, 32, 0) == 5 + 3 + 3 * 416);
  CHECK(protocol_frame_count(Statistic::Local, 13, 32, 9) == 5 + 10 * (3 + 3 * 416));
  CHECK(protocol_round_trips(Statistic::Global, 13, 32, 0) == 628);
}

TEST_CASE("configuration checks") {
  SessionConfig cfg;
  cfg.latency_ms = -1;
  CHECK_THROWS_AS(cfg.validate(), RangeError);
  cfg.latency_ms = 0;
  cfg.alpha = 1.5;
  CHECK_THROWS_AS(cfg.validate(), RangeError);
  const auto inst = random_instance(2, 49);
  CHECK_THROWS_AS(run_initiator(SessionConfig{}, inst.x, inst.w), DimensionError);
}
