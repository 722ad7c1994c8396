#include "plcguard/simlab/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace plcguard::simlab {

using telemetry::PacketMeta;

Ipv4Address benign_peer_ip(std::size_t j) {
  if (j >= 80) throw std::out_of_range("at most 80 benign peers");
  return Ipv4Address::from_octets(127, 0, 0, static_cast<std::uint8_t>(10 + j));
}

Ipv4Address attacker_ip(Label kind) {
  return Ipv4Address::from_octets(127, 0, 0, static_cast<std::uint8_t>(100 + static_cast<int>(kind)));
}

Ipv4Address controller_ip(std::size_t i) {
  if (i >= 9) throw std::out_of_range("at most 9 controllers");
  return Ipv4Address::from_octets(127, 0, 0, static_cast<std::uint8_t>(1 + i));
}

BenignRequestSource::BenignRequestSource(std::uint8_t function, std::uint64_t seed) : fc_(function), rng_(seed) {}

Bytes BenignRequestSource::next() {
  if (tid_ == 0) return read_request(++tid_, 3, 0, 10);
  ++tid_;
  const auto addr = static_cast<std::uint16_t>(uniform_int(rng_, 0, 999));
  switch (fc_) {
    case 1:
    case 2:
    case 3:
    case 4:
      return read_request(tid_, fc_, addr, static_cast<std::uint16_t>(uniform_int(rng_, 1, 100)));
    case 5:
      return write_single_coil(tid_, addr, uniform_int(rng_, 0, 1) == 1);
    case 6:
      return write_single_register(tid_, addr, static_cast<std::uint16_t>(uniform_int(rng_, 0, 65535)));
    case 15: {
      // A coil byte per cycle; every 20th cycle refreshes a 64-coil bank.
      const std::size_t n = tid_ % 20 == 0 ? 64 : static_cast<std::size_t>(uniform_int(rng_, 1, 8));
      std::unique_ptr<bool[]> values(new bool[n]);
      for (std::size_t i = 0; i < n; ++i) values[i] = uniform_int(rng_, 0, 1) == 1;
      return write_multiple_coils(tid_, addr, std::span<const bool>(values.get(), n));
    }
    case 16: {
      std::vector<std::uint16_t> values(2);
      for (auto& v : values) v = static_cast<std::uint16_t>(uniform_int(rng_, 0, 65535));
      return write_multiple_registers(tid_, addr, values);
    }
    default:
      throw std::invalid_argument("no benign role for function code " + std::to_string(fc_));
  }
}

std::int64_t benign_gap_us(SplitRng& rng, double poll_interval_ms) {
  return std::llround(poll_interval_ms * 1000.0 * uniform_real(rng, 0.9, 1.1));
}

namespace {

constexpr std::uint32_t kMinEthernetFrame = 60;

class Emitter {
 public:
  explicit Emitter(Trace& out) : out_(out) {}

  void emit(std::int64_t ts, const MacAddress& mac, Ipv4Address ip, std::uint16_t sport, Bytes payload, Label label) {
    TraceRecord r;
    r.meta.timestamp_us = ts;
    r.meta.src_mac = mac;
    r.meta.src_ip = ip;
    r.meta.src_port = sport;
    r.meta.dst_port = 502;
    r.meta.payload_len_bytes = static_cast<std::uint32_t>(payload.size());
    r.meta.frame_len_bytes = std::max(kMinEthernetFrame, r.meta.payload_len_bytes + kWireOverheadBytes);
    r.payload = std::move(payload);
    r.label = label;
    out_.push_back(std::move(r));
  }

 private:
  Trace& out_;
};

double exponential(SplitRng& rng, double mean) { return -mean * std::log1p(-uniform01(rng)); }

Bytes random_bytes(SplitRng& rng, std::size_t n) {
  Bytes b(n);
  for (auto& v : b) v = static_cast<std::uint8_t>(uniform_int(rng, 0, 255));
  return b;
}

// Attack generators. Each appends to `out` starting at t0 and returns the
// timestamp of its last packet. `more(t)` says whether to keep emitting.
struct AttackContext {
  const ScenarioSpec& spec;
  Emitter& out;
  SplitRng rng;
  std::int64_t t0;
  std::size_t emitted = 0;

  bool more(std::int64_t t) const {
    if (spec.attack_packets > 0) return emitted < spec.attack_packets;
    return t < std::llround(spec.duration_s * 1e6);
  }
  void emit(std::int64_t t, const MacAddress& mac, Ipv4Address ip, std::uint16_t port, Bytes payload) {
    out.emit(t, mac, ip, port, std::move(payload), spec.kind);
    ++emitted;
  }
};

// Man-in-the-middle blackholing. The interceptor holds the HMI's requests
// and releases them coalesced into single segments (3-10 requests each) at
// collapsing intervals, then goes silent. New connection per episode.
std::int64_t gen_ex1(AttackContext& c) {
  const auto ip = attacker_ip(Label::Ex1);
  const auto mac = pseudo_mac(ip);
  std::int64_t t = c.t0;
  std::uint16_t port = 50000, tid = 0;
  while (c.more(t)) {
    ++port;
    double dt = 30000.0;
    const auto n = uniform_int(c.rng, 8, 20);
    for (std::int64_t i = 0; i < n && c.more(t); ++i) {
      Bytes segment;
      const auto k = uniform_int(c.rng, 3, 10);
      for (std::int64_t q = 0; q < k; ++q) {
        const auto fc = static_cast<std::uint8_t>(uniform_int(c.rng, 3, 4));
        const auto msg = read_request(++tid, fc, static_cast<std::uint16_t>(uniform_int(c.rng, 0, 999)),
                                      static_cast<std::uint16_t>(uniform_int(c.rng, 1, 100)));
        segment.insert(segment.end(), msg.begin(), msg.end());
      }
      c.emit(t, mac, ip, port, std::move(segment));
      t += std::llround(dt);
      dt = std::max(100.0, dt * uniform_real(c.rng, 0.4, 0.6));
    }
    t += uniform_int(c.rng, 200'000, 600'000);
  }
  return t;
}

Bytes read_response(std::uint16_t tid, std::uint8_t fc, std::size_t registers, SplitRng& rng) {
  Bytes pdu{fc, static_cast<std::uint8_t>(2 * registers)};
  const auto data = random_bytes(rng, 2 * registers);
  pdu.insert(pdu.end(), data.begin(), data.end());
  return frame_pdu(tid, 1, pdu);
}

// Sensor spoofing: forged register-read responses carrying fake process
// values, 3-10x the benign rate.
std::int64_t gen_ex2(AttackContext& c) {
  const auto ip = attacker_ip(Label::Ex2);
  const auto mac = pseudo_mac(ip);
  const double poll_us = c.spec.poll_interval_ms * 1000.0;
  std::int64_t t = c.t0;
  std::uint16_t port = 51000, tid = 0;
  while (c.more(t)) {
    ++port;
    const double factor = uniform_real(c.rng, 3.0, 10.0);
    const auto session = uniform_int(c.rng, 20, 60);
    for (std::int64_t i = 0; i < session && c.more(t); ++i) {
      const auto fc = static_cast<std::uint8_t>(uniform_int(c.rng, 3, 4));
      c.emit(t, mac, ip, port, read_response(++tid, fc, static_cast<std::size_t>(uniform_int(c.rng, 10, 60)), c.rng));
      t += std::llround(poll_us / factor * uniform_real(c.rng, 0.9, 1.1));
    }
  }
  return t;
}

// Actuator spoofing: forged block writes (coils or registers), 3-10x the
// benign rate.
std::int64_t gen_ex3(AttackContext& c) {
  const auto ip = attacker_ip(Label::Ex3);
  const auto mac = pseudo_mac(ip);
  const double poll_us = c.spec.poll_interval_ms * 1000.0;
  std::int64_t t = c.t0;
  std::uint16_t port = 52000, tid = 0;
  while (c.more(t)) {
    ++port;
    const double factor = uniform_real(c.rng, 3.0, 10.0);
    const auto session = uniform_int(c.rng, 20, 60);
    for (std::int64_t i = 0; i < session && c.more(t); ++i) {
      const auto addr = static_cast<std::uint16_t>(uniform_int(c.rng, 0, 999));
      Bytes msg;
      if (uniform_int(c.rng, 0, 1) == 0) {
        const auto n = static_cast<std::size_t>(uniform_int(c.rng, 100, 400));
        std::unique_ptr<bool[]> v(new bool[n]);
        for (std::size_t k = 0; k < n; ++k) v[k] = uniform_int(c.rng, 0, 1) == 1;
        msg = write_multiple_coils(++tid, addr, std::span<const bool>(v.get(), n));
      } else {
        std::vector<std::uint16_t> v(static_cast<std::size_t>(uniform_int(c.rng, 10, 25)));
        for (auto& x : v) x = static_cast<std::uint16_t>(uniform_int(c.rng, 0, 65535));
        msg = write_multiple_registers(++tid, addr, v);
      }
      c.emit(t, mac, ip, port, std::move(msg));
      t += std::llround(poll_us / factor * uniform_real(c.rng, 0.9, 1.1));
    }
  }
  return t;
}

// Eavesdropping man-in-the-middle: the attacker's MAC relays the responses
// of several controllers, so one MAC presents several IPs, with jittered
// timing. Before intercepting, the host polls briefly under its own address
// like any other client, so every relayed frame shares its MAC with at
// least one other IP.
std::int64_t gen_ex4(AttackContext& c) {
  const auto own_ip = attacker_ip(Label::Ex4);
  const auto mac = pseudo_mac(own_ip);
  const auto gap = std::llround(c.spec.poll_interval_ms * 1000.0);
  std::int64_t t = std::max<std::int64_t>(0, c.t0 - 6 * gap);
  BenignRequestSource own(3, c.rng());
  for (int i = 0; i < 5; ++i) {
    c.out.emit(t, mac, own_ip, 41000, own.next(), Label::Normal);
    t += benign_gap_us(c.rng, c.spec.poll_interval_ms);
  }
  t = std::max(t, c.t0);
  std::uint16_t tid = 0;
  while (c.more(t)) {
    const auto plc = controller_ip(static_cast<std::size_t>(uniform_int(c.rng, 0, 2)));
    const auto fc = static_cast<std::uint8_t>(uniform_int(c.rng, 3, 4));
    c.emit(t, mac, plc, 502, read_response(++tid, fc, static_cast<std::size_t>(uniform_int(c.rng, 10, 100)), c.rng));
    t += uniform_int(c.rng, 1'000, 60'000);
  }
  return t;
}

// Command injection: bursts of register writes, each burst from a fresh
// source port.
std::int64_t gen_ex6(AttackContext& c) {
  const auto ip = attacker_ip(Label::Ex6);
  const auto mac = pseudo_mac(ip);
  std::int64_t t = c.t0;
  std::uint16_t port = 53000, tid = 0;
  while (c.more(t)) {
    ++port;
    const auto n = uniform_int(c.rng, 10, 30);
    for (std::int64_t i = 0; i < n && c.more(t); ++i) {
      std::vector<std::uint16_t> values(static_cast<std::size_t>(uniform_int(c.rng, 30, 60)));
      for (auto& v : values) v = static_cast<std::uint16_t>(uniform_int(c.rng, 0, 65535));
      c.emit(t, mac, ip, port, write_multiple_registers(++tid, static_cast<std::uint16_t>(uniform_int(c.rng, 0, 999)), values));
      t += uniform_int(c.rng, 200, 2'000);
    }
    t += uniform_int(c.rng, 100'000, 400'000);
  }
  return t;
}

// Volumetric flood from many sender threads, one ephemeral port each.
std::int64_t gen_ex7(AttackContext& c) {
  const auto ip = attacker_ip(Label::Ex7);
  const auto mac = pseudo_mac(ip);
  const std::size_t threads = std::max<std::size_t>(1, c.spec.thread_count);
  double t = double(c.t0);
  std::uint16_t tid = 0;
  while (c.more(std::llround(t))) {
    const std::size_t size = c.spec.packet_size_bytes
                                 ? c.spec.packet_size_bytes
                                 : static_cast<std::size_t>(uniform_int(c.rng, 200, 2000));
    const auto port = static_cast<std::uint16_t>(10000 + uniform_index(c.rng, std::min<std::size_t>(threads, 50000)));
    c.emit(std::llround(t), mac, ip, port, padded_frame(++tid, size));
    t += std::max(1.0, exponential(c.rng, 50.0));
  }
  return std::llround(t);
}

}  // namespace

Trace gen_traffic(const ScenarioSpec& spec) {
  if (!(spec.duration_s > 0)) throw std::invalid_argument("duration_s must be positive");
  if (spec.kind == Label::Ex7 && spec.packet_size_bytes != 0 &&
      (spec.packet_size_bytes < 200 || spec.packet_size_bytes > 2000))
    throw std::invalid_argument("EX-7 packet size must lie in [200, 2000]");
  Trace trace;
  Emitter emitter(trace);
  std::int64_t end_us = std::llround(spec.duration_s * 1e6);

  if (spec.kind != Label::Normal) {
    AttackContext ctx{spec, emitter, SplitRng(derive_seed(spec.rng_seed, 1)), std::llround(spec.attack_start_s * 1e6)};
    std::int64_t last = ctx.t0;
    switch (spec.kind) {
      case Label::Ex1: last = gen_ex1(ctx); break;
      case Label::Ex2: last = gen_ex2(ctx); break;
      case Label::Ex3: last = gen_ex3(ctx); break;
      case Label::Ex4: last = gen_ex4(ctx); break;
      case Label::Ex6: last = gen_ex6(ctx); break;
      case Label::Ex7: last = gen_ex7(ctx); break;
      case Label::Normal: break;
    }
    if (spec.attack_packets > 0) end_us = std::max(end_us, last + 1'000'000);
  }

  for (std::size_t j = 0; j < spec.peer_count; ++j) {
    SplitRng rng(derive_seed(spec.rng_seed, 1000 + j));
    const auto ip = benign_peer_ip(j);
    const auto mac = pseudo_mac(ip);
    BenignRequestSource source(kBenchFunctions[j % kBenchFunctions.size()], derive_seed(spec.rng_seed, 2000 + j));
    const auto port = static_cast<std::uint16_t>(40000 + 100 * j);
    std::int64_t t = uniform_int(rng, 0, std::llround(spec.poll_interval_ms * 1000.0));
    while (t < end_us) {
      emitter.emit(t, mac, ip, port, source.next(), Label::Normal);
      t += benign_gap_us(rng, spec.poll_interval_ms);
    }
  }

  std::stable_sort(trace.begin(), trace.end(),
                   [](const TraceRecord& a, const TraceRecord& b) { return a.meta.timestamp_us < b.meta.timestamp_us; });
  return trace;
}

namespace {

std::string to_hex(const Bytes& b) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(b.size() * 2);
  for (auto v : b) {
    s.push_back(digits[v >> 4]);
    s.push_back(digits[v & 15]);
  }
  return s;
}

Bytes from_hex(const std::string& s) {
  if (s.size() % 2) throw std::runtime_error("payload_hex has odd length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::runtime_error("payload_hex has a non-hex digit");
  };
  Bytes b(s.size() / 2);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = static_cast<std::uint8_t>(nibble(s[2 * i]) << 4 | nibble(s[2 * i + 1]));
  return b;
}

}  // namespace

void write_trace(std::ostream& out, const Trace& trace) {
  for (const auto& r : trace) {
    nlohmann::ordered_json j;
    j["ts_us"] = r.meta.timestamp_us;
    j["src_mac"] = r.meta.src_mac.to_string();
    j["src_ip"] = r.meta.src_ip.to_string();
    j["src_port"] = r.meta.src_port;
    j["frame_len"] = r.meta.frame_len_bytes;
    j["payload_len"] = r.meta.payload_len_bytes;
    j["payload_hex"] = to_hex(r.payload);
    j["label"] = to_string(r.label);
    out << j.dump() << '\n';
  }
}

void write_trace(const std::filesystem::path& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_trace(out, trace);
}

Trace read_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TraceRecord r;
      r.meta.timestamp_us = j.at("ts_us").get<std::int64_t>();
      r.meta.src_mac = MacAddress::parse(j.at("src_mac").get<std::string>());
      r.meta.src_ip = Ipv4Address::parse(j.at("src_ip").get<std::string>());
      r.meta.src_port = j.at("src_port").get<std::uint16_t>();
      r.meta.dst_port = j.value("dst_port", std::uint16_t{502});
      r.meta.frame_len_bytes = j.at("frame_len").get<std::uint32_t>();
      r.meta.payload_len_bytes = j.at("payload_len").get<std::uint32_t>();
      r.payload = from_hex(j.value("payload_hex", std::string{}));
      r.label = j.contains("label") ? label_from_string(j.at("label").get<std::string>()) : Label::Normal;
      trace.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw std::runtime_error("trace line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return trace;
}

Trace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_trace(in);
}

std::vector<telemetry::PacketMeta> packets_of(const Trace& trace) {
  std::vector<telemetry::PacketMeta> out;
  out.reserve(trace.size());
  for (const auto& r : trace) out.push_back(r.meta);
  return out;
}

}  // namespace plcguard::simlab
