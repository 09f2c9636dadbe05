#include <doctest.h>

#include <thread>

#include "geosmpc/errors.hpp"
#include "geosmpc/net.hpp"

using namespace geosmpc;

TEST_CASE("frames round-trip for every type") {
  const FrameType types[] = {FrameType::Hello,         FrameType::CircuitHash, FrameType::GarbledTables,
                             FrameType::GarblerLabels, FrameType::OtA,         FrameType::OtB,
                             FrameType::OtE,           FrameType::Result,      FrameType::Final,
                             FrameType::Register,      FrameType::Registered,  FrameType::ConnectRequest,
                             FrameType::Accept,        FrameType::NoPeer,      FrameType::Error};
  for (const auto t : types) {
    Frame f{t, session_id_from_name("abc"), {1, 2, 3, static_cast<std::uint8_t>(t)}};
    const auto bytes = encode_frame(f);
    CHECK(bytes.size() == kFrameHeaderSize + 4);
    CHECK(bytes[0] == 4);
    CHECK(bytes[4] == static_cast<std::uint8_t>(t));
    CHECK(decode_frame(bytes) == f);
  }
  CHECK(decode_frame(encode_frame(Frame{FrameType::Hello, {}, {}})).payload.empty());
}

TEST_CASE("malformed frames") {
  auto bytes = encode_frame(Frame{FrameType::Hello, {}, {9}});
  auto unknown = bytes;
  unknown[4] = 0x55;
  CHECK_THROWS_AS(decode_frame(unknown), ProtocolError);
  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(decode_frame(truncated), ProtocolError);
  auto oversize = encode_frame(Frame{FrameType::Hello, {}, std::vector<std::uint8_t>(100)});
  CHECK_THROWS_AS(decode_frame(oversize, 99), ProtocolError);
  CHECK(!is_known_frame_type(0x00));
  CHECK(is_known_frame_type(0x7F));
}

TEST_CASE("endpoints") {
  const auto e = Endpoint::parse("127.0.0.1:7700");
  CHECK(e.host == "127.0.0.1");
  CHECK(e.port == 7700);
  CHECK(e.str() == "127.0.0.1:7700");
  CHECK(Endpoint::parse("localhost:0").port == 0);
  CHECK_THROWS_AS(Endpoint::parse("nohost"), ParseError);
  CHECK_THROWS_AS(Endpoint::parse("h:99999"), ParseError);
  CHECK_THROWS_AS(Endpoint::parse("h:x"), ParseError);
}

TEST_CASE("session ids derive from names") {
  CHECK(session_id_from_name("a") == session_id_from_name("a"));
  CHECK(session_id_from_name("a") != session_id_from_name("b"));
}

TEST_CASE("channels exchange frames and count them") {
  Listener listener(Endpoint::parse("127.0.0.1:0"));
  Transcript transcript;
  std::thread server([&] {
    ChannelOptions o;
    o.transcript = &transcript;
    Channel ch(listener.accept(), o);
    auto f = ch.recv();
    f.payload.push_back(42);
    ch.send(f);
  });
  ChannelOptions o;
  o.latency = std::chrono::milliseconds(20);
  Channel client(Socket::connect(Endpoint{"127.0.0.1", listener.port()}), o);
  const auto t0 = std::chrono::steady_clock::now();
  client.send(FrameType::Result, session_id_from_name("s"), {7});
  const auto reply = client.recv();
  CHECK(std::chrono::steady_clock::now() - t0 >= std::chrono::milliseconds(20));
  server.join();
  CHECK(reply.payload == std::vector<std::uint8_t>{7, 42});
  CHECK(client.frames_sent() == 1);
  CHECK(client.frames_received() == 1);
  CHECK(client.bytes_sent() == kFrameHeaderSize + 1);
  CHECK(transcript.received.size() == kFrameHeaderSize + 1);
  CHECK(transcript.sent.size() == kFrameHeaderSize + 2);
}

TEST_CASE("connection failures and timeouts") {
  Listener listener(Endpoint::parse("127.0.0.1:0"));
  const auto port = listener.port();
  {
    ChannelOptions o;
    o.timeout = std::chrono::milliseconds(100);
    Channel ch(Socket::connect(Endpoint{"127.0.0.1", port}), o);
    Socket accepted = listener.accept();
    CHECK_THROWS_AS(ch.recv(), Timeout);
    accepted.close();
    CHECK_THROWS_AS(ch.recv(), ConnectionError);
  }
  listener.shutdown();
  Listener other(Endpoint::parse("127.0.0.1:0"));
  const auto closed_port = other.port();
  other.shutdown();
  CHECK_THROWS_AS(Socket::connect(Endpoint{"127.0.0.1", closed_port}), ConnectionError);
}
