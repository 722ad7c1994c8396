#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace plcguard::relay {

struct Message {
  std::vector<std::uint8_t> bytes;
  /// False for a non-Modbus burst (protocol identifier != 0).
  bool modbus = true;
};

class MalformedStream : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMbapHeaderBytes = 6;

/// Splits a client byte stream into Modbus/TCP application messages on the
/// MBAP length field. Bytes are never altered. A burst whose protocol
/// identifier is non-zero is passed on whole as a single message.
class MbapFramer {
 public:
  /// Appends one read burst and returns every message it completes.
  /// Throws MalformedStream on a zero length field; the framer stays
  /// malformed afterwards.
  std::vector<Message> feed(std::span<const std::uint8_t> burst);

  bool malformed() const { return malformed_; }
  std::size_t buffered() const { return buffer_.size(); }

 private:
  std::vector<std::uint8_t> buffer_;
  bool malformed_ = false;
};

}  // namespace plcguard::relay
