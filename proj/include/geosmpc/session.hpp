#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "geosmpc/circuit_builder.hpp"
#include "geosmpc/esda.hpp"
#include "geosmpc/net.hpp"

namespace geosmpc {

enum class Role { Initiator, Receiver, Proxy };
const char* to_string(Role r);

inline constexpr std::uint16_t kProtocolVersion = 1;

struct SessionMetrics {
  std::uint64_t frames_sent = 0;
  std::uint64_t frames_received = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  std::uint32_t executions = 0;
  std::uint64_t round_trips = 0;
  double wall_seconds = 0.0;
};

struct SessionConfig {
  std::string proxy_address = "127.0.0.1:7700";
  SessionId session_id = session_id_from_name("default");
  Statistic statistic = Statistic::Global;
  FixedPointFormat fmt = kDefaultFormat;
  /// K: additional garbled executions on permuted data.
  std::uint32_t permutations = 0;
  /// The initiator derives garbling and OT randomness from it; the
  /// receiver derives its permutations and OT randomness from it.
  std::uint64_t seed = 0;
  double alpha = 0.05;
  /// Injected one-way latency per frame sent, in milliseconds.
  double latency_ms = 0.0;
  std::chrono::milliseconds phase_timeout{60000};
  /// How long the initiator keeps retrying while no receiver is registered,
  /// and how long a registered receiver waits for an initiator.
  std::chrono::milliseconds rendezvous_timeout{60000};
  std::uint8_t ot_group = 1;
  std::uint32_t max_frame_bytes = kDefaultMaxFrameBytes;

  /// Receiver only: called once the proxy confirmed the registration.
  std::function<void()> on_registered;
  Transcript* transcript = nullptr;
  SessionMetrics* metrics = nullptr;

  /// Throws RangeError for negative latency or an invalid format.
  void validate() const;
};

/// Frames exchanged by one session (both directions, proxy rendezvous
/// excluded). A pure function of the statistic, n, the word width and K.
std::uint64_t protocol_frame_count(Statistic stat, std::size_t n, std::size_t total_bits, std::uint32_t k);
/// Round trips = frames / 2.
std::uint64_t protocol_round_trips(Statistic stat, std::size_t n, std::size_t total_bits, std::uint32_t k);

/// Initiator (garbler). Standardizes x, builds and garbles the circuit once
/// per execution, sends tables and its own labels, acts as OT sender,
/// post-processes the decoded outputs and shares the final result.
MoranResult run_initiator(const SessionConfig& cfg, const RegionVector& x, const WeightMatrix& w);

/// Receiver (evaluator). Standardizes y, registers with the proxy, obtains
/// its labels by OT, evaluates, reports decoded outputs, and returns the
/// initiator's final result after checking it against what it decoded.
MoranResult run_receiver(const SessionConfig& cfg, const RegionVector& y, const WeightMatrix& w);

struct LocalPairRun {
  MoranResult initiator;
  MoranResult receiver;
  SessionMetrics initiator_metrics;
  SessionMetrics receiver_metrics;
  Transcript initiator_transcript;
  Transcript receiver_transcript;
  double wall_seconds = 0.0;
};

/// Proxy, receiver and initiator in this process over 127.0.0.1 (receiver
/// first). cfg.proxy_address is ignored. Rethrows the first party failure.
LocalPairRun run_local_pair(SessionConfig cfg, const RegionVector& x, const RegionVector& y, const WeightMatrix& w,
                            bool keep_transcripts = false);

struct ProxyOptions {
  std::chrono::milliseconds handshake_timeout{10000};
  /// Idle limit for a relayed session.
  std::chrono::milliseconds relay_timeout{600000};
  std::uint32_t max_frame_bytes = kDefaultMaxFrameBytes;
};

/// Rendezvous and relay server. Receivers REGISTER under a session id and
/// wait; an initiator's CONNECT_REQUEST is forwarded to the waiting
/// receiver, whose ACCEPT goes back, after which frames are relayed both
/// ways until either side closes.
class Proxy {
 public:
  Proxy(const std::string& listen_address, ProxyOptions options = {});
  ~Proxy();
  Proxy(const Proxy&) = delete;
  Proxy& operator=(const Proxy&) = delete;

  std::uint16_t port() const { return listener_.port(); }
  /// Starts the accept loop on a background thread.
  void start();
  /// Runs the accept loop on the calling thread until stop().
  void serve();
  void stop();

  std::size_t sessions_completed() const { return completed_.load(); }
  std::size_t protocol_errors() const { return protocol_errors_.load(); }

 private:
  void handle(Socket sock);
  void relay(Socket initiator, Socket receiver, SessionId id);
  void spawn(std::function<void()> task);

  ProxyOptions options_;
  Listener listener_;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::mutex mu_;
  std::map<SessionId, Socket> waiting_;
  std::vector<SessionId> active_;
  std::vector<int> open_fds_;
  std::vector<std::thread> workers_;
  std::atomic<std::size_t> completed_{0};
  std::atomic<std::size_t> protocol_errors_{0};
};

}  // namespace geosmpc
