#include "plcguard/simlab/modbus.hpp"

#include <algorithm>

#include <stdexcept>

namespace plcguard::simlab {

std::string_view function_name(std::uint8_t fc) {
  switch (fc) {
    case 1: return "read_coils";
    case 2: return "read_discrete_inputs";
    case 3: return "read_holding_registers";
    case 4: return "read_input_registers";
    case 5: return "write_single_coil";
    case 6: return "write_single_register";
    case 15: return "write_multiple_coils";
    case 16: return "write_multiple_registers";
    default: return "unknown";
  }
}

std::optional<MbapHeader> parse_mbap(std::span<const std::uint8_t> frame) {
  if (frame.size() < 7) return std::nullopt;
  MbapHeader h;
  h.transaction = std::uint16_t(frame[0] << 8 | frame[1]);
  h.protocol = std::uint16_t(frame[2] << 8 | frame[3]);
  h.length = std::uint16_t(frame[4] << 8 | frame[5]);
  h.unit = frame[6];
  if (h.length == 0 || frame.size() != 6u + h.length) return std::nullopt;
  return h;
}

Bytes frame_pdu(std::uint16_t tid, std::uint8_t unit, std::span<const std::uint8_t> pdu) {
  const std::size_t len = pdu.size() + 1;
  if (len > 0xFFFF) throw std::invalid_argument("PDU too long for MBAP");
  Bytes out(7 + pdu.size());
  out[0] = std::uint8_t(tid >> 8);
  out[1] = std::uint8_t(tid);
  out[4] = std::uint8_t(len >> 8);
  out[5] = std::uint8_t(len);
  out[6] = unit;
  std::copy(pdu.begin(), pdu.end(), out.begin() + 7);
  return out;
}

namespace {
void put16(Bytes& b, std::uint16_t v) {
  b.push_back(std::uint8_t(v >> 8));
  b.push_back(std::uint8_t(v));
}
}  // namespace

Bytes read_request(std::uint16_t tid, std::uint8_t fc, std::uint16_t address, std::uint16_t count) {
  Bytes pdu{fc};
  put16(pdu, address);
  put16(pdu, count);
  return frame_pdu(tid, 1, pdu);
}

Bytes write_single_coil(std::uint16_t tid, std::uint16_t address, bool on) {
  Bytes pdu{5};
  put16(pdu, address);
  put16(pdu, on ? 0xFF00 : 0x0000);
  return frame_pdu(tid, 1, pdu);
}

Bytes write_single_register(std::uint16_t tid, std::uint16_t address, std::uint16_t value) {
  Bytes pdu{6};
  put16(pdu, address);
  put16(pdu, value);
  return frame_pdu(tid, 1, pdu);
}

Bytes write_multiple_coils(std::uint16_t tid, std::uint16_t address, std::span<const bool> values) {
  Bytes pdu{15};
  put16(pdu, address);
  put16(pdu, static_cast<std::uint16_t>(values.size()));
  const std::size_t nbytes = (values.size() + 7) / 8;
  pdu.push_back(static_cast<std::uint8_t>(nbytes));
  Bytes packed(nbytes, 0);
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i]) packed[i / 8] |= std::uint8_t(1u << (i % 8));
  pdu.insert(pdu.end(), packed.begin(), packed.end());
  return frame_pdu(tid, 1, pdu);
}

Bytes write_multiple_registers(std::uint16_t tid, std::uint16_t address, std::span<const std::uint16_t> values) {
  Bytes pdu{16};
  put16(pdu, address);
  put16(pdu, static_cast<std::uint16_t>(values.size()));
  pdu.push_back(static_cast<std::uint8_t>(values.size() * 2));
  for (auto v : values) put16(pdu, v);
  return frame_pdu(tid, 1, pdu);
}

Bytes padded_frame(std::uint16_t tid, std::size_t total_bytes, std::uint8_t fill) {
  if (total_bytes < 8) throw std::invalid_argument("padded_frame: need at least 8 bytes");
  Bytes pdu{16};
  pdu.resize(total_bytes - 7, fill);
  return frame_pdu(tid, 1, pdu);
}

}  // namespace plcguard::simlab
