#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace plcguard::simlab {

using Bytes = std::vector<std::uint8_t>;

/// The eight function codes exercised by the latency benchmark.
inline constexpr std::array<std::uint8_t, 8> kBenchFunctions = {1, 2, 3, 4, 5, 6, 15, 16};

std::string_view function_name(std::uint8_t fc);

struct MbapHeader {
  std::uint16_t transaction = 0;
  std::uint16_t protocol = 0;
  std::uint16_t length = 0;  // unit id + PDU
  std::uint8_t unit = 1;
};

std::optional<MbapHeader> parse_mbap(std::span<const std::uint8_t> frame);

/// Wraps a PDU (function code first) in an MBAP header.
Bytes frame_pdu(std::uint16_t transaction, std::uint8_t unit, std::span<const std::uint8_t> pdu);

// Request builders. `count` is coils/inputs/registers.
Bytes read_request(std::uint16_t tid, std::uint8_t fc, std::uint16_t address, std::uint16_t count);
Bytes write_single_coil(std::uint16_t tid, std::uint16_t address, bool on);
Bytes write_single_register(std::uint16_t tid, std::uint16_t address, std::uint16_t value);
Bytes write_multiple_coils(std::uint16_t tid, std::uint16_t address, std::span<const bool> values);
Bytes write_multiple_registers(std::uint16_t tid, std::uint16_t address, std::span<const std::uint16_t> values);

/// A syntactically valid MBAP frame of exactly `total_bytes` (>= 8) whose
/// PDU is an FC16-shaped body padded with filler; used for floods.
Bytes padded_frame(std::uint16_t tid, std::size_t total_bytes, std::uint8_t fill = 0xA5);

/// Reads one complete MBAP frame from a byte source; helper for clients.
template <typename ReadExact>
std::optional<Bytes> read_frame(ReadExact&& read_exact) {
  Bytes frame(6);
  if (!read_exact(std::span(frame.data(), 6))) return std::nullopt;
  const std::size_t len = std::size_t(frame[4]) << 8 | frame[5];
  if (len == 0) return std::nullopt;
  frame.resize(6 + len);
  if (!read_exact(std::span(frame.data() + 6, len))) return std::nullopt;
  return frame;
}

}  // namespace plcguard::simlab
