#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "plcguard/rng.hpp"
#include "plcguard/simlab/modbus.hpp"
#include "plcguard/telemetry.hpp"
#include "plcguard/types.hpp"

namespace plcguard::simlab {

/// Ethernet + IPv4 + TCP header bytes in front of every Modbus/TCP message.
inline constexpr std::uint32_t kWireOverheadBytes = 54;

struct ScenarioSpec {
  Label kind = Label::Normal;  // Normal = benign only
  double duration_s = 60.0;
  std::size_t peer_count = 8;  // benign background peers
  double poll_interval_ms = 50.0;
  /// EX-7 message size; 0 draws each message uniformly from [200, 2000].
  std::uint32_t packet_size_bytes = 0;
  std::size_t thread_count = 500;  // EX-7 sender threads (one source port each)
  std::uint64_t rng_seed = 1;
  /// When > 0, the attack emits exactly this many packets and the trace
  /// is extended as needed; otherwise the attack runs until duration_s.
  std::size_t attack_packets = 0;
  double attack_start_s = 2.0;
};

struct TraceRecord {
  telemetry::PacketMeta meta;
  Bytes payload;
  Label label = Label::Normal;
};

using Trace = std::vector<TraceRecord>;

/// Source address of benign peer j (role = kBenchFunctions[j % 8]).
Ipv4Address benign_peer_ip(std::size_t j);
Ipv4Address attacker_ip(Label kind);
/// Address of controller i; EX-4 relays responses under these.
Ipv4Address controller_ip(std::size_t i = 0);

/// Request stream of one benign HMI role. Shared by the trace generator
/// and the live benchmark so both produce the same message shapes. The
/// first message of a session is always a status read (FC 3).
class BenignRequestSource {
 public:
  BenignRequestSource(std::uint8_t function, std::uint64_t seed);
  Bytes next();
  /// True until the opening status read has been produced.
  bool opening() const { return tid_ == 0; }
  std::uint8_t function() const { return fc_; }

 private:
  std::uint8_t fc_;
  SplitRng rng_;
  std::uint16_t tid_ = 0;
};

/// Benign inter-request gap in microseconds: poll interval +-10 %.
std::int64_t benign_gap_us(SplitRng& rng, double poll_interval_ms);

/// Deterministic timed trace, sorted by timestamp.
Trace gen_traffic(const ScenarioSpec& spec);

/// JSON-lines: {ts_us, src_mac, src_ip, src_port, frame_len, payload_len, payload_hex, label}
void write_trace(std::ostream& out, const Trace& trace);
void write_trace(const std::filesystem::path& path, const Trace& trace);
Trace read_trace(std::istream& in);
Trace read_trace(const std::filesystem::path& path);

std::vector<telemetry::PacketMeta> packets_of(const Trace& trace);

}  // namespace plcguard::simlab
