#include "geosmpc/session.hpp"

#include <spdlog/spdlog.h>
#include <sys/socket.h>

#include <algorithm>
#include <future>
#include <fmt/format.h>

#include "geosmpc/bytes.hpp"
#include "geosmpc/errors.hpp"
#include "geosmpc/garble.hpp"
#include "geosmpc/oracle.hpp"
#include "geosmpc/ot.hpp"

namespace geosmpc {

namespace {

using Clock = std::chrono::steady_clock;

enum class ErrorCode : std::uint8_t { Protocol = 1, Version = 2, CircuitHash = 3, Parameters = 4 };

struct Hello {
  std::uint16_t version = kProtocolVersion;
  FixedPointFormat fmt;
  Statistic stat = Statistic::Global;
  std::uint32_t n = 0;
  std::uint32_t permutations = 0;
  std::uint8_t ot_group = 0;
  std::uint16_t ot_element_bytes = 0;
  Digest id_hash{};
};

std::vector<std::uint8_t> encode_hello(const Hello& h) {
  ByteWriter w;
  w.u16(h.version);
  w.u8(h.fmt.total_bits);
  w.u8(h.fmt.frac_bits);
  w.u8(static_cast<std::uint8_t>(h.stat));
  w.u32(h.n);
  w.u32(h.permutations);
  w.u8(h.ot_group);
  w.u16(h.ot_element_bytes);
  w.bytes(h.id_hash);
  return w.take();
}

Hello decode_hello(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  Hello h;
  h.version = r.u16();
  // A different version may lay out the rest differently.
  if (h.version != kProtocolVersion) return h;
  h.fmt.total_bits = r.u8();
  h.fmt.frac_bits = r.u8();
  const auto stat = r.u8();
  if (stat > 1) throw ProtocolError("HELLO names an unknown statistic");
  h.stat = static_cast<Statistic>(stat);
  h.n = r.u32();
  h.permutations = r.u32();
  h.ot_group = r.u8();
  h.ot_element_bytes = r.u16();
  const auto ids = r.bytes(32);
  std::copy(ids.begin(), ids.end(), h.id_hash.begin());
  r.expect_done("HELLO");
  return h;
}

/// Reported to the peer before a locally detected failure propagates.
void send_error(Channel& ch, const SessionId& id, ErrorCode code, std::string_view message) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(code));
  w.text(message);
  try {
    ch.send(FrameType::Error, id, w.take());
  } catch (const Error&) {
    // Peer already gone; the local error is what matters.
  }
}

class PeerReported : public std::exception {};

[[noreturn]] void raise_peer_error(const Frame& f) {
  ErrorCode code = ErrorCode::Protocol;
  std::string text = "unspecified";
  try {
    ByteReader r(f.payload);
    code = static_cast<ErrorCode>(r.u8());
    text = r.text();
  } catch (const FormatError&) {
  }
  const std::string msg = fmt::format("peer reported: {}", text);
  switch (code) {
    case ErrorCode::Version: throw PeerVersionMismatch(msg);
    case ErrorCode::CircuitHash: throw CircuitHashMismatch(msg);
    default: throw ProtocolError(msg);
  }
}

Frame expect(Channel& ch, FrameType type, const SessionId& id) {
  Frame f = ch.recv();
  if (f.type == FrameType::Error) raise_peer_error(f);
  if (f.type != type) {
    const auto msg = fmt::format("expected {} but received {}", to_string(type), to_string(f.type));
    send_error(ch, id, ErrorCode::Protocol, msg);
    throw ProtocolError(msg);
  }
  if (f.session != id) {
    send_error(ch, id, ErrorCode::Protocol, "session id mismatch");
    throw ProtocolError("frame carries a foreign session id");
  }
  return f;
}

ChannelOptions channel_options(const SessionConfig& cfg) {
  ChannelOptions o;
  o.max_frame_bytes = cfg.max_frame_bytes;
  o.latency = std::chrono::microseconds(static_cast<std::int64_t>(cfg.latency_ms * 1000.0));
  o.timeout = cfg.phase_timeout;
  o.transcript = cfg.transcript;
  return o;
}

Channel connect_as_initiator(const SessionConfig& cfg) {
  const auto endpoint = Endpoint::parse(cfg.proxy_address);
  const auto deadline = Clock::now() + cfg.rendezvous_timeout;
  auto backoff = std::chrono::milliseconds(20);
  for (;;) {
    Channel ch(Socket::connect(endpoint), channel_options(cfg));
    ch.send(FrameType::ConnectRequest, cfg.session_id);
    const Frame f = ch.recv();
    if (f.type == FrameType::Accept) return ch;
    if (f.type == FrameType::Error) raise_peer_error(f);
    if (f.type != FrameType::NoPeer) throw ProtocolError(fmt::format("proxy answered {}", to_string(f.type)));
    if (Clock::now() + backoff > deadline) {
      throw NoPeerWaiting(fmt::format("no receiver registered for this session at {}", cfg.proxy_address));
    }
    spdlog::debug("no receiver waiting yet; retrying in {} ms", backoff.count());
    std::this_thread::sleep_for(backoff);
    backoff = std::min(backoff * 2, std::chrono::milliseconds(1000));
  }
}

Channel connect_as_receiver(const SessionConfig& cfg) {
  Channel ch(Socket::connect(Endpoint::parse(cfg.proxy_address)), channel_options(cfg));
  ch.send(FrameType::Register, cfg.session_id);
  const Frame ack = ch.recv();
  if (ack.type == FrameType::Error) raise_peer_error(ack);
  if (ack.type != FrameType::Registered) throw ProtocolError(fmt::format("proxy answered {}", to_string(ack.type)));
  if (cfg.on_registered) cfg.on_registered();
  ch.set_timeout(cfg.rendezvous_timeout);
  expect(ch, FrameType::ConnectRequest, cfg.session_id);
  ch.send(FrameType::Accept, cfg.session_id);
  ch.set_timeout(cfg.phase_timeout);
  return ch;
}

std::vector<std::uint8_t> pack_bits(std::span<const std::uint8_t> bits) {
  std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) out[i / 8] |= static_cast<std::uint8_t>((bits[i] & 1) << (i % 8));
  return out;
}

std::vector<std::uint8_t> unpack_bits(std::span<const std::uint8_t> packed, std::size_t count) {
  if (packed.size() != (count + 7) / 8) throw ProtocolError("packed bit vector has the wrong size");
  std::vector<std::uint8_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = (packed[i / 8] >> (i % 8)) & 1;
  return out;
}

std::vector<std::uint8_t> encode_labels(std::span<const Block> labels) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(labels.size()));
  for (const auto& l : labels) {
    w.u64(l.lo);
    w.u64(l.hi);
  }
  return w.take();
}

std::vector<Block> decode_labels(std::span<const std::uint8_t> payload, std::size_t expected) {
  ByteReader r(payload);
  const auto n = r.u32();
  if (n != expected) throw ProtocolError(fmt::format("expected {} garbler labels, received {}", expected, n));
  std::vector<Block> out(n);
  for (auto& l : out) {
    l.lo = r.u64();
    l.hi = r.u64();
  }
  r.expect_done("GARBLER_LABELS");
  return out;
}

void write_significance(ByteWriter& w, const Significance& s) {
  w.u32(s.greater);
  w.u32(s.lesser);
  w.u32(s.r);
  w.f64(s.p);
  w.f64(s.pseudo_sd);
}

Significance read_significance(ByteReader& r) {
  Significance s;
  s.greater = r.u32();
  s.lesser = r.u32();
  s.r = r.u32();
  s.p = r.f64();
  s.pseudo_sd = r.f64();
  return s;
}

std::vector<std::uint8_t> encode_result(const MoranResult& res) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(res.region_ids.size()));
  for (const auto& id : res.region_ids) w.text(id);
  w.u32(res.permutations);
  w.f64(res.alpha);
  w.u8(res.global.has_value());
  if (const auto& g = res.global) {
    w.f64(g->interaction);
    w.f64(g->moran_i);
    w.u8(g->significance.has_value());
    if (g->significance) write_significance(w, *g->significance);
  }
  w.u8(res.local.has_value());
  if (const auto& l = res.local) {
    w.u32(static_cast<std::uint32_t>(l->interaction.size()));
    for (std::size_t i = 0; i < l->interaction.size(); ++i) {
      w.f64(l->interaction[i]);
      w.f64(l->moran_i[i]);
      w.u8(static_cast<std::uint8_t>(l->clusters[i]));
    }
    w.u32(static_cast<std::uint32_t>(l->significance.size()));
    for (const auto& s : l->significance) write_significance(w, s);
  }
  return w.take();
}

MoranResult decode_result(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  MoranResult res;
  const auto n = r.u32();
  if (n > r.remaining() / 4) throw ProtocolError("result lists too many regions");
  for (std::uint32_t i = 0; i < n; ++i) res.region_ids.push_back(r.text());
  res.permutations = r.u32();
  res.alpha = r.f64();
  if (r.u8()) {
    GlobalMoran g;
    g.interaction = r.f64();
    g.moran_i = r.f64();
    if (r.u8()) g.significance = read_significance(r);
    res.global = g;
  }
  if (r.u8()) {
    LocalMoran l;
    const auto m = r.u32();
    if (m > r.remaining() / 17) throw ProtocolError("result lists too many local values");
    for (std::uint32_t i = 0; i < m; ++i) {
      l.interaction.push_back(r.f64());
      l.moran_i.push_back(r.f64());
      const auto c = r.u8();
      if (c > 4) throw ProtocolError("unknown cluster class");
      l.clusters.push_back(static_cast<Cluster>(c));
    }
    const auto k = r.u32();
    if (k > r.remaining() / 28) throw ProtocolError("result lists too many significance entries");
    for (std::uint32_t i = 0; i < k; ++i) l.significance.push_back(read_significance(r));
    res.local = std::move(l);
  }
  r.expect_done("FINAL");
  return res;
}

Hello local_hello(const SessionConfig& cfg, const RegionVector& v, const OtGroup& group) {
  Hello h;
  h.fmt = cfg.fmt;
  h.stat = cfg.statistic;
  h.n = static_cast<std::uint32_t>(v.size());
  h.permutations = cfg.permutations;
  h.ot_group = group.id();
  h.ot_element_bytes = static_cast<std::uint16_t>(group.element_size());
  h.id_hash = v.id_hash();
  return h;
}

/// Empty when compatible, else the reason.
std::optional<std::pair<ErrorCode, std::string>> incompatibility(const Hello& mine, const Hello& theirs) {
  if (theirs.version != mine.version) {
    return {{ErrorCode::Version, fmt::format("protocol version {} vs {}", mine.version, theirs.version)}};
  }
  if (theirs.fmt != mine.fmt) return {{ErrorCode::Parameters, "fixed-point formats differ"}};
  if (theirs.stat != mine.stat) return {{ErrorCode::Parameters, "statistics differ"}};
  if (theirs.n != mine.n) return {{ErrorCode::Parameters, fmt::format("region counts differ ({} vs {})", mine.n, theirs.n)}};
  if (theirs.permutations != mine.permutations) return {{ErrorCode::Parameters, "permutation counts differ"}};
  if (theirs.ot_group != mine.ot_group || theirs.ot_element_bytes != mine.ot_element_bytes) {
    return {{ErrorCode::Parameters, "OT groups differ"}};
  }
  if (theirs.id_hash != mine.id_hash) return {{ErrorCode::Parameters, "region id lists differ"}};
  return std::nullopt;
}

void check_hello(Channel& ch, const SessionConfig& cfg, const Hello& mine, const Frame& f) {
  const Hello theirs = decode_hello(f.payload);
  if (const auto bad = incompatibility(mine, theirs)) {
    send_error(ch, cfg.session_id, bad->first, bad->second);
    if (bad->first == ErrorCode::Version) throw PeerVersionMismatch(bad->second);
    throw ProtocolError(bad->second);
  }
}

void check_inputs(const SessionConfig& cfg, const RegionVector& v, const WeightMatrix& w) {
  cfg.validate();
  v.validate();
  if (v.size() < 3) throw DimensionError("a session needs at least three regions");
  if (w.size() != v.size()) {
    throw DimensionError(fmt::format("{} regions but {}x{} weights", v.size(), w.size(), w.size()));
  }
}

void fill_metrics(const SessionConfig& cfg, const Channel& ch, std::size_t n, Clock::time_point start) {
  if (!cfg.metrics) return;
  auto& m = *cfg.metrics;
  m.frames_sent = ch.frames_sent();
  m.frames_received = ch.frames_received();
  m.bytes_sent = ch.bytes_sent();
  m.bytes_received = ch.bytes_received();
  m.executions = cfg.permutations + 1;
  m.round_trips = protocol_round_trips(cfg.statistic, n, cfg.fmt.total_bits, cfg.permutations);
  m.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

const char* to_string(Role r) {
  switch (r) {
    case Role::Initiator: return "initiator";
    case Role::Receiver: return "receiver";
    case Role::Proxy: return "proxy";
  }
  return "?";
}

void SessionConfig::validate() const {
  fmt.validate();
  if (latency_ms < 0.0) throw RangeError("latency must be non-negative");
  if (!(alpha > 0.0 && alpha < 1.0)) throw RangeError("alpha must lie in (0, 1)");
}

std::uint64_t protocol_frame_count(Statistic, std::size_t n, std::size_t total_bits, std::uint32_t k) {
  const std::uint64_t ots = static_cast<std::uint64_t>(n) * total_bits;
  // 2 HELLO + 2 CIRCUIT_HASH + FINAL, and per execution:
  // GARBLED_TABLES + GARBLER_LABELS + 3 frames per OT + RESULT.
  return 5 + (static_cast<std::uint64_t>(k) + 1) * (3 + 3 * ots);
}

std::uint64_t protocol_round_trips(Statistic stat, std::size_t n, std::size_t total_bits, std::uint32_t k) {
  return protocol_frame_count(stat, n, total_bits, k) / 2;
}

MoranResult run_initiator(const SessionConfig& cfg, const RegionVector& x, const WeightMatrix& w) {
  check_inputs(cfg, x, w);
  const auto start = Clock::now();
  const auto fmt = cfg.fmt;
  const std::size_t n = x.size();
  const auto z_x = standardize(x.values);
  const auto zx_words = encode(z_x, fmt);
  const auto bits_x = to_bits(zx_words, fmt);
  const Circuit circuit = build_moran_circuit(cfg.statistic, w, fmt);
  const Digest hash = circuit_hash(circuit);
  const auto group = group_by_id(cfg.ot_group);
  const Hello mine = local_hello(cfg, x, *group);
  const auto& id = cfg.session_id;

  Channel ch = connect_as_initiator(cfg);
  ch.send(FrameType::Hello, id, encode_hello(mine));
  check_hello(ch, cfg, mine, expect(ch, FrameType::Hello, id));
  ch.send(FrameType::CircuitHash, id, std::vector<std::uint8_t>(hash.begin(), hash.end()));
  const Frame their_hash = expect(ch, FrameType::CircuitHash, id);
  if (!std::equal(their_hash.payload.begin(), their_hash.payload.end(), hash.begin(), hash.end())) {
    send_error(ch, id, ErrorCode::CircuitHash, "circuit hashes differ");
    throw CircuitHashMismatch("the receiver built a different circuit (weights, format or statistic differ)");
  }

  const Seed base = seed_from_u64(cfg.seed);
  const std::size_t receiver_bits = circuit.input_b.size();
  std::vector<std::vector<double>> outputs;
  for (std::uint32_t round = 0; round <= cfg.permutations; ++round) {
    const GarbledBundle bundle = garble(circuit, derive_seed(base, "garble", round));
    ch.send(FrameType::GarbledTables, id, serialize(bundle.circuit));
    ch.send(FrameType::GarblerLabels, id, encode_labels(select_labels(bundle.labels_a, bits_x)));

    Prg ot_prg(derive_seed(base, "ot-sender", round));
    for (std::size_t j = 0; j < receiver_bits; ++j) {
      const std::uint64_t ot_index = static_cast<std::uint64_t>(round) * receiver_bits + j;
      auto [state, msg_a] = ot_sender_round1(*group, ot_prg, ot_index);
      ByteWriter wa;
      wa.u32(static_cast<std::uint32_t>(j));
      wa.bytes(msg_a);
      ch.send(FrameType::OtA, id, wa.take());

      const Frame fb = expect(ch, FrameType::OtB, id);
      ByteReader rb(fb.payload);
      if (rb.u32() != j) throw ProtocolError("OT_B answers a different transfer");
      const auto msg_b = rb.bytes(rb.remaining());
      const auto cts = ot_sender_round2(*group, state, GroupElement(msg_b.begin(), msg_b.end()), bundle.labels_b[j]);
      ByteWriter we;
      we.u32(static_cast<std::uint32_t>(j));
      we.u64(cts.e0.lo);
      we.u64(cts.e0.hi);
      we.u64(cts.e1.lo);
      we.u64(cts.e1.hi);
      ch.send(FrameType::OtE, id, we.take());
    }

    const Frame fr = expect(ch, FrameType::Result, id);
    ByteReader rr(fr.payload);
    if (rr.u32() != round) throw ProtocolError("RESULT belongs to a different execution");
    const auto nbits = rr.u32();
    if (nbits != circuit.outputs.size()) throw ProtocolError("RESULT has the wrong number of output bits");
    const auto bits = unpack_bits(rr.bytes(rr.remaining()), nbits);
    outputs.push_back(decode(from_bits(bits, fmt), fmt));
  }

  MoranResult result;
  result.region_ids = x.ids;
  result.permutations = cfg.permutations;
  result.alpha = cfg.alpha;
  const std::span<const std::vector<double>> permuted(outputs.begin() + 1, outputs.end());
  if (cfg.statistic == Statistic::Global) {
    std::vector<double> flat;
    for (const auto& p : permuted) flat.push_back(p.at(0));
    result.global = finish_global(outputs[0].at(0), flat, z_x);
  } else {
    const auto lag = decode(fixed_spatial_lag(zx_words, w, fmt), fmt);
    result.local = finish_local(outputs[0], permuted, z_x, lag, cfg.alpha);
  }
  ch.send(FrameType::Final, id, encode_result(result));
  fill_metrics(cfg, ch, n, start);
  return result;
}

MoranResult run_receiver(const SessionConfig& cfg, const RegionVector& y, const WeightMatrix& w) {
  check_inputs(cfg, y, w);
  const auto start = Clock::now();
  const auto fmt = cfg.fmt;
  const std::size_t n = y.size();
  const auto zy_words = encode(standardize(y.values), fmt);
  const Circuit circuit = build_moran_circuit(cfg.statistic, w, fmt);
  const Digest hash = circuit_hash(circuit);
  const auto group = group_by_id(cfg.ot_group);
  const Hello mine = local_hello(cfg, y, *group);
  const auto& id = cfg.session_id;

  Channel ch = connect_as_receiver(cfg);
  check_hello(ch, cfg, mine, expect(ch, FrameType::Hello, id));
  ch.send(FrameType::Hello, id, encode_hello(mine));
  const Frame their_hash = expect(ch, FrameType::CircuitHash, id);
  if (!std::equal(their_hash.payload.begin(), their_hash.payload.end(), hash.begin(), hash.end())) {
    send_error(ch, id, ErrorCode::CircuitHash, "circuit hashes differ");
    throw CircuitHashMismatch("the initiator built a different circuit (weights, format or statistic differ)");
  }
  ch.send(FrameType::CircuitHash, id, std::vector<std::uint8_t>(hash.begin(), hash.end()));

  const Seed base = seed_from_u64(cfg.seed);
  const std::size_t my_bits = circuit.input_b.size();
  std::vector<std::vector<double>> decoded;
  for (std::uint32_t round = 0; round <= cfg.permutations; ++round) {
    const auto words =
        round == 0 ? zy_words : apply_permutation<FixedWord>(zy_words, round_permutation(n, cfg.seed, round));
    const auto bits = to_bits(words, fmt);

    const GarbledCircuit gc = deserialize_garbled(expect(ch, FrameType::GarbledTables, id).payload);
    const auto labels_a = decode_labels(expect(ch, FrameType::GarblerLabels, id).payload, circuit.input_a.size());

    Prg ot_prg(derive_seed(base, "ot-receiver", round));
    std::vector<Block> labels_b;
    labels_b.reserve(my_bits);
    for (std::size_t j = 0; j < my_bits; ++j) {
      const std::uint64_t ot_index = static_cast<std::uint64_t>(round) * my_bits + j;
      const Frame fa = expect(ch, FrameType::OtA, id);
      ByteReader ra(fa.payload);
      if (ra.u32() != j) throw ProtocolError("OT_A out of sequence");
      const auto msg_a = ra.bytes(ra.remaining());
      auto [state, msg_b] = ot_receiver_round1(*group, bits[j], GroupElement(msg_a.begin(), msg_a.end()), ot_prg, ot_index);
      ByteWriter wb;
      wb.u32(static_cast<std::uint32_t>(j));
      wb.bytes(msg_b);
      ch.send(FrameType::OtB, id, wb.take());

      const Frame fe = expect(ch, FrameType::OtE, id);
      ByteReader re(fe.payload);
      if (re.u32() != j) throw ProtocolError("OT_E out of sequence");
      OTCiphertexts cts;
      cts.e0.lo = re.u64();
      cts.e0.hi = re.u64();
      cts.e1.lo = re.u64();
      cts.e1.hi = re.u64();
      re.expect_done("OT_E");
      labels_b.push_back(ot_receiver_finish(*group, state, cts));
    }

    const auto out_bits = decode_outputs(evaluate(gc, circuit, labels_a, labels_b), gc.output_decoding);
    ByteWriter wr;
    wr.u32(round);
    wr.u32(static_cast<std::uint32_t>(out_bits.size()));
    wr.bytes(pack_bits(out_bits));
    ch.send(FrameType::Result, id, wr.take());
    decoded.push_back(decode(from_bits(out_bits, fmt), fmt));
  }

  MoranResult result = decode_result(expect(ch, FrameType::Final, id).payload);
  const bool consistent = cfg.statistic == Statistic::Global
                              ? result.global && result.global->interaction == decoded[0].at(0)
                              : result.local && result.local->interaction == decoded[0];
  if (!consistent || result.region_ids != y.ids) {
    throw ProtocolError("the initiator's final result disagrees with the decoded outputs");
  }
  fill_metrics(cfg, ch, n, start);
  return result;
}

// ---------------------------------------------------------------------------
// Proxy

namespace {

/// Drops a descriptor from the proxy's registry before the socket closes,
/// so stop() never shuts down a reused descriptor.
class FdRegistration {
 public:
  FdRegistration(std::function<void(int)> forget, int fd) : forget_(std::move(forget)), fd_(fd) {}
  ~FdRegistration() {
    if (fd_ >= 0) forget_(fd_);
  }
  void release() { fd_ = -1; }

 private:
  std::function<void(int)> forget_;
  int fd_;
};

}  // namespace

Proxy::Proxy(const std::string& listen_address, ProxyOptions options)
    : options_(options), listener_(Endpoint::parse(listen_address)) {}

Proxy::~Proxy() { stop(); }

void Proxy::start() {
  accept_thread_ = std::thread([this] { serve(); });
}

void Proxy::serve() {
  spdlog::info("proxy listening on port {}", port());
  while (!stopping_.load()) {
    Socket s = listener_.accept();
    if (!s.valid()) break;
    const int fd = s.fd();
    {
      std::lock_guard lk(mu_);
      if (stopping_.load()) break;
      open_fds_.push_back(fd);
    }
    spawn([this, sock = std::make_shared<Socket>(std::move(s))]() mutable { handle(std::move(*sock)); });
  }
}

void Proxy::spawn(std::function<void()> task) {
  std::lock_guard lk(mu_);
  workers_.emplace_back(std::move(task));
}

void Proxy::stop() {
  if (stopping_.exchange(true)) return;
  listener_.shutdown();
  {
    std::lock_guard lk(mu_);
    for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lk(mu_);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
  std::lock_guard lk(mu_);
  waiting_.clear();
}

void Proxy::handle(Socket sock) {
  const int fd = sock.fd();
  ChannelOptions opts;
  opts.max_frame_bytes = options_.max_frame_bytes;
  opts.timeout = options_.handshake_timeout;
  Channel ch(std::move(sock), opts);
  auto forget = [this](int f) {
    std::lock_guard lk(mu_);
    open_fds_.erase(std::remove(open_fds_.begin(), open_fds_.end(), f), open_fds_.end());
  };
  FdRegistration registration(forget, fd);

  Frame first;
  try {
    first = ch.recv();
  } catch (const ProtocolError& e) {
    ++protocol_errors_;
    spdlog::warn("proxy: closing connection after malformed frame: {}", e.what());
    return;
  } catch (const Error& e) {
    spdlog::debug("proxy: connection dropped before handshake: {}", e.what());
    return;
  }

  const SessionId id = first.session;
  switch (first.type) {
    case FrameType::Register: {
      std::lock_guard lk(mu_);
      const bool duplicate =
          waiting_.contains(id) || std::find(active_.begin(), active_.end(), id) != active_.end();
      if (duplicate) {
        spdlog::warn("proxy: rejecting duplicate session id {}", to_hex(id));
        send_error(ch, id, ErrorCode::Protocol, "duplicate session id");
        return;
      }
      try {
        ch.send(FrameType::Registered, id);
      } catch (const Error&) {
        return;
      }
      registration.release();
      waiting_.emplace(id, std::move(ch.socket()));
      spdlog::info("proxy: receiver registered for session {}", to_hex(id));
      return;
    }
    case FrameType::ConnectRequest: {
      Socket receiver;
      {
        std::lock_guard lk(mu_);
        if (auto it = waiting_.find(id); it != waiting_.end()) {
          receiver = std::move(it->second);
          waiting_.erase(it);
          active_.push_back(id);
        }
      }
      if (!receiver.valid()) {
        try {
          ch.send(FrameType::NoPeer, id);
        } catch (const Error&) {
        }
        return;
      }
      relay(std::move(ch.socket()), std::move(receiver), id);
      {
        std::lock_guard lk(mu_);
        active_.erase(std::remove(active_.begin(), active_.end(), id), active_.end());
      }
      return;
    }
    default:
      ++protocol_errors_;
      spdlog::warn("proxy: unexpected {} as first frame", to_string(first.type));
      send_error(ch, id, ErrorCode::Protocol, "expected REGISTER or CONNECT_REQUEST");
      return;
  }
}

void Proxy::relay(Socket initiator_sock, Socket receiver_sock, SessionId id) {
  const int receiver_fd = receiver_sock.fd();
  auto forget = [this](int f) {
    std::lock_guard lk(mu_);
    open_fds_.erase(std::remove(open_fds_.begin(), open_fds_.end(), f), open_fds_.end());
  };
  FdRegistration receiver_registration(forget, receiver_fd);

  ChannelOptions opts;
  opts.max_frame_bytes = options_.max_frame_bytes;
  opts.timeout = options_.handshake_timeout;
  Channel initiator(std::move(initiator_sock), opts);
  Channel receiver(std::move(receiver_sock), opts);

  try {
    receiver.send(FrameType::ConnectRequest, id);
    const Frame answer = receiver.recv();
    initiator.send(answer);
    if (answer.type != FrameType::Accept) return;
  } catch (const Error& e) {
    spdlog::warn("proxy: rendezvous for session {} failed: {}", to_hex(id), e.what());
    try {
      initiator.send(FrameType::NoPeer, id);
    } catch (const Error&) {
    }
    return;
  }

  initiator.set_timeout(options_.relay_timeout);
  receiver.set_timeout(options_.relay_timeout);
  std::atomic<bool> malformed{false};
  auto pump = [&](Channel& from, Channel& to) {
    try {
      for (;;) {
        Frame f = from.recv();
        if (f.session != id) throw ProtocolError("frame carries a foreign session id");
        to.send(f);
      }
    } catch (const ProtocolError& e) {
      malformed = true;
      spdlog::warn("proxy: protocol error in session {}: {}", to_hex(id), e.what());
    } catch (const Error&) {
      // One side closed; tear the pair down.
    }
    from.socket().shutdown();
    to.socket().shutdown();
  };
  std::thread back([&] { pump(receiver, initiator); });
  pump(initiator, receiver);
  back.join();
  if (malformed) {
    ++protocol_errors_;
  } else {
    ++completed_;
  }
  spdlog::info("proxy: session {} closed", to_hex(id));
}

}  // namespace geosmpc

namespace geosmpc {

LocalPairRun run_local_pair(SessionConfig cfg, const RegionVector& x, const RegionVector& y, const WeightMatrix& w,
                            bool keep_transcripts) {
  Proxy proxy("127.0.0.1:0");
  proxy.start();
  cfg.proxy_address = fmt::format("127.0.0.1:{}", proxy.port());
  cfg.on_registered = nullptr;

  LocalPairRun run;
  const auto start = Clock::now();
  std::promise<void> registered;
  auto ready = registered.get_future();
  SessionConfig receiver_cfg = cfg;
  receiver_cfg.transcript = keep_transcripts ? &run.receiver_transcript : nullptr;
  receiver_cfg.metrics = &run.receiver_metrics;
  receiver_cfg.on_registered = [&] { registered.set_value(); };
  std::exception_ptr receiver_error;
  std::thread receiver([&] {
    try {
      run.receiver = run_receiver(receiver_cfg, y, w);
    } catch (...) {
      receiver_error = std::current_exception();
      try {
        registered.set_value();
      } catch (const std::future_error&) {
      }
    }
  });
  ready.wait();

  SessionConfig initiator_cfg = cfg;
  initiator_cfg.transcript = keep_transcripts ? &run.initiator_transcript : nullptr;
  initiator_cfg.metrics = &run.initiator_metrics;
  std::exception_ptr initiator_error;
  if (!receiver_error) {
    try {
      run.initiator = run_initiator(initiator_cfg, x, w);
    } catch (...) {
      initiator_error = std::current_exception();
    }
  }
  receiver.join();
  proxy.stop();
  run.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (initiator_error) std::rethrow_exception(initiator_error);
  if (receiver_error) std::rethrow_exception(receiver_error);
  return run;
}

}  // namespace geosmpc
