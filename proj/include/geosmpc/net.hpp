#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace geosmpc {

using SessionId = std::array<std::uint8_t, 16>;

/// SHA-256 of `name`, truncated to 16 bytes.
SessionId session_id_from_name(std::string_view name);

enum class FrameType : std::uint8_t {
  Hello = 0x01,
  CircuitHash = 0x02,
  GarbledTables = 0x03,
  GarblerLabels = 0x04,
  OtA = 0x05,
  OtB = 0x06,
  OtE = 0x07,
  Result = 0x08,
  Final = 0x09,
  // Rendezvous with the proxy.
  Register = 0x10,
  Registered = 0x11,
  ConnectRequest = 0x12,
  Accept = 0x13,
  NoPeer = 0x14,
  Error = 0x7F,
};

bool is_known_frame_type(std::uint8_t type);
const char* to_string(FrameType type);

/// Wire layout: payload length u32 LE, type u8, session id (16 bytes), payload.
struct Frame {
  FrameType type = FrameType::Error;
  SessionId session{};
  std::vector<std::uint8_t> payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

inline constexpr std::size_t kFrameHeaderSize = 4 + 1 + 16;
inline constexpr std::uint32_t kDefaultMaxFrameBytes = 64u << 20;

std::vector<std::uint8_t> encode_frame(const Frame& f);
/// Decodes exactly one frame occupying all of `bytes`. Throws ProtocolError.
Frame decode_frame(std::span<const std::uint8_t> bytes, std::uint32_t max_payload = kDefaultMaxFrameBytes);

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  /// "host:port"; throws ParseError.
  static Endpoint parse(std::string_view text);
  std::string str() const;
};

/// Owning TCP socket.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket();

  /// Throws ConnectionError when nothing is listening.
  static Socket connect(const Endpoint& ep);

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }
  /// Receive timeout; zero disables it.
  void set_timeout(std::chrono::milliseconds timeout);
  void send_all(std::span<const std::uint8_t> data);
  /// Throws ConnectionError on EOF and Timeout when the timeout elapses.
  void recv_exact(std::span<std::uint8_t> out);
  void shutdown();
  void close();

 private:
  int fd_ = -1;
};

class Listener {
 public:
  /// Port 0 picks an ephemeral port.
  explicit Listener(const Endpoint& ep);
  std::uint16_t port() const { return port_; }
  /// Blocks; returns an invalid socket once shutdown() was called.
  Socket accept();
  void shutdown();

 private:
  Socket sock_;
  std::uint16_t port_ = 0;
};

/// Everything a party saw on the wire, as encoded frames.
struct Transcript {
  std::vector<std::uint8_t> sent;
  std::vector<std::uint8_t> received;
};

struct ChannelOptions {
  std::uint32_t max_frame_bytes = kDefaultMaxFrameBytes;
  /// Injected one-way delay, slept before every send.
  std::chrono::microseconds latency{0};
  std::chrono::milliseconds timeout{60000};
  Transcript* transcript = nullptr;
};

/// Framed, sequential message channel over one socket.
class Channel {
 public:
  Channel(Socket sock, ChannelOptions options);

  void send(const Frame& f);
  void send(FrameType type, const SessionId& session, std::vector<std::uint8_t> payload = {});
  /// Throws ProtocolError on an unknown type or oversize length.
  Frame recv();
  void set_timeout(std::chrono::milliseconds timeout);

  Socket& socket() { return sock_; }
  std::uint64_t frames_sent() const { return frames_sent_; }
  std::uint64_t frames_received() const { return frames_received_; }
  std::uint64_t bytes_sent() const { return bytes_sent_; }
  std::uint64_t bytes_received() const { return bytes_received_; }

 private:
  Socket sock_;
  ChannelOptions options_;
  std::uint64_t frames_sent_ = 0;
  std::uint64_t frames_received_ = 0;
  std::uint64_t bytes_sent_ = 0;
  std::uint64_t bytes_received_ = 0;
};

}  // namespace geosmpc
