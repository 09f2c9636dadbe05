#include "geosmpc/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <thread>
#include <fmt/format.h>

#include "geosmpc/bytes.hpp"
#include "geosmpc/crypto.hpp"
#include "geosmpc/errors.hpp"

namespace geosmpc {

SessionId session_id_from_name(std::string_view name) {
  const auto d = Sha256().update("geosmpc.session").update(name).finish();
  SessionId id{};
  std::copy_n(d.begin(), id.size(), id.begin());
  return id;
}

bool is_known_frame_type(std::uint8_t t) { return (t >= 0x01 && t <= 0x09) || (t >= 0x10 && t <= 0x14) || t == 0x7F; }

const char* to_string(FrameType type) {
  switch (type) {
    case FrameType::Hello: return "HELLO";
    case FrameType::CircuitHash: return "CIRCUIT_HASH";
    case FrameType::GarbledTables: return "GARBLED_TABLES";
    case FrameType::GarblerLabels: return "GARBLER_LABELS";
    case FrameType::OtA: return "OT_A";
    case FrameType::OtB: return "OT_B";
    case FrameType::OtE: return "OT_E";
    case FrameType::Result: return "RESULT";
    case FrameType::Final: return "FINAL";
    case FrameType::Register: return "REGISTER";
    case FrameType::Registered: return "REGISTERED";
    case FrameType::ConnectRequest: return "CONNECT_REQUEST";
    case FrameType::Accept: return "ACCEPT";
    case FrameType::NoPeer: return "NO_PEER";
    case FrameType::Error: return "ERROR";
  }
  return "UNKNOWN";
}

std::vector<std::uint8_t> encode_frame(const Frame& f) {
  ByteWriter w;
  w.buffer().reserve(kFrameHeaderSize + f.payload.size());
  w.u32(static_cast<std::uint32_t>(f.payload.size()));
  w.u8(static_cast<std::uint8_t>(f.type));
  w.bytes(f.session);
  w.bytes(f.payload);
  return w.take();
}

namespace {

struct Header {
  std::uint32_t length;
  FrameType type;
  SessionId session;
};

Header parse_header(std::span<const std::uint8_t> raw, std::uint32_t max_payload) {
  ByteReader r(raw.first(kFrameHeaderSize));
  Header h{};
  h.length = r.u32();
  const auto type = r.u8();
  if (!is_known_frame_type(type)) throw ProtocolError(fmt::format("unknown frame type 0x{:02x}", type));
  if (h.length > max_payload) {
    throw ProtocolError(fmt::format("frame payload {} exceeds limit {}", h.length, max_payload));
  }
  h.type = static_cast<FrameType>(type);
  const auto sid = r.bytes(16);
  std::copy(sid.begin(), sid.end(), h.session.begin());
  return h;
}

}  // namespace

Frame decode_frame(std::span<const std::uint8_t> bytes, std::uint32_t max_payload) {
  if (bytes.size() < kFrameHeaderSize) throw ProtocolError("frame shorter than its header");
  const Header h = parse_header(bytes, max_payload);
  if (bytes.size() - kFrameHeaderSize != h.length) {
    throw ProtocolError(fmt::format("frame declares {} payload bytes but carries {}", h.length,
                                    bytes.size() - kFrameHeaderSize));
  }
  return Frame{h.type, h.session, {bytes.begin() + kFrameHeaderSize, bytes.end()}};
}

Endpoint Endpoint::parse(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw ParseError(fmt::format("address '{}' is not host:port", text));
  }
  Endpoint ep;
  ep.host = std::string(text.substr(0, colon));
  const auto port = text.substr(colon + 1);
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc() || ptr != port.data() + port.size() || value > 65535) {
    throw ParseError(fmt::format("address '{}' has an invalid port", text));
  }
  ep.port = static_cast<std::uint16_t>(value);
  return ep;
}

std::string Endpoint::str() const { return fmt::format("{}:{}", host, port); }

namespace {

sockaddr_in resolve(const Endpoint& ep) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string host = ep.host == "localhost" || ep.host.empty() ? "127.0.0.1" : ep.host;
  if (const int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &res); rc != 0 || !res) {
    throw ConnectionError(fmt::format("cannot resolve '{}': {}", ep.host, ::gai_strerror(rc)));
  }
  sockaddr_in addr{};
  std::memcpy(&addr, res->ai_addr, sizeof(addr));
  ::freeaddrinfo(res);
  addr.sin_port = htons(ep.port);
  return addr;
}

}  // namespace

Socket& Socket::operator=(Socket&& o) noexcept {
  if (this != &o) {
    close();
    fd_ = std::exchange(o.fd_, -1);
  }
  return *this;
}

Socket::~Socket() { close(); }

Socket Socket::connect(const Endpoint& ep) {
  const auto addr = resolve(ep);
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) throw ConnectionError(fmt::format("socket(): {}", std::strerror(errno)));
  if (::connect(s.fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw ConnectionError(fmt::format("cannot connect to {}: {}", ep.str(), std::strerror(errno)));
  }
  const int one = 1;
  ::setsockopt(s.fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return s;
}

void Socket::set_timeout(std::chrono::milliseconds timeout) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

void Socket::send_all(std::span<const std::uint8_t> data) {
  std::size_t done = 0;
  while (done < data.size()) {
    const auto n = ::send(fd_, data.data() + done, data.size() - done, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) throw Timeout("send timed out");
      throw ConnectionError(fmt::format("send failed: {}", std::strerror(errno)));
    }
    done += static_cast<std::size_t>(n);
  }
}

void Socket::recv_exact(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    const auto n = ::recv(fd_, out.data() + done, out.size() - done, 0);
    if (n == 0) throw ConnectionError("peer closed the connection");
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) throw Timeout("timed out waiting for the peer");
      throw ConnectionError(fmt::format("recv failed: {}", std::strerror(errno)));
    }
    done += static_cast<std::size_t>(n);
  }
}

void Socket::shutdown() {
  if (valid()) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::close() {
  if (valid()) {
    ::close(fd_);
    fd_ = -1;
  }
}

Listener::Listener(const Endpoint& ep) {
  auto addr = resolve(ep);
  sock_ = Socket(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!sock_.valid()) throw ConnectionError(fmt::format("socket(): {}", std::strerror(errno)));
  const int one = 1;
  ::setsockopt(sock_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(sock_.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw ConnectionError(fmt::format("cannot bind {}: {}", ep.str(), std::strerror(errno)));
  }
  if (::listen(sock_.fd(), 64) != 0) throw ConnectionError(fmt::format("listen: {}", std::strerror(errno)));
  socklen_t len = sizeof(addr);
  ::getsockname(sock_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

Socket Listener::accept() {
  for (;;) {
    const int fd = ::accept4(sock_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
    if (fd >= 0) {
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return Socket(fd);
    }
    if (errno == EINTR || errno == ECONNABORTED) continue;
    return Socket();
  }
}

void Listener::shutdown() { sock_.shutdown(); }

Channel::Channel(Socket sock, ChannelOptions options) : sock_(std::move(sock)), options_(options) {
  sock_.set_timeout(options_.timeout);
}

void Channel::set_timeout(std::chrono::milliseconds timeout) {
  options_.timeout = timeout;
  sock_.set_timeout(timeout);
}

void Channel::send(const Frame& f) {
  if (options_.latency.count() > 0) std::this_thread::sleep_for(options_.latency);
  const auto bytes = encode_frame(f);
  sock_.send_all(bytes);
  if (options_.transcript) options_.transcript->sent.insert(options_.transcript->sent.end(), bytes.begin(), bytes.end());
  ++frames_sent_;
  bytes_sent_ += bytes.size();
}

void Channel::send(FrameType type, const SessionId& session, std::vector<std::uint8_t> payload) {
  send(Frame{type, session, std::move(payload)});
}

Frame Channel::recv() {
  std::array<std::uint8_t, kFrameHeaderSize> raw{};
  sock_.recv_exact(raw);
  const Header h = parse_header(raw, options_.max_frame_bytes);
  Frame f{h.type, h.session, std::vector<std::uint8_t>(h.length)};
  sock_.recv_exact(f.payload);
  if (auto* t = options_.transcript) {
    t->received.insert(t->received.end(), raw.begin(), raw.end());
    t->received.insert(t->received.end(), f.payload.begin(), f.payload.end());
  }
  ++frames_received_;
  bytes_received_ += kFrameHeaderSize + h.length;
  return f;
}

}  // namespace geosmpc
