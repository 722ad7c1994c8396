#include "plcguard/framing.hpp"

namespace plcguard::relay {

std::vector<Message> MbapFramer::feed(std::span<const std::uint8_t> burst) {
  if (malformed_) throw MalformedStream("stream already marked malformed");
  std::vector<Message> out;
  buffer_.insert(buffer_.end(), burst.begin(), burst.end());
  std::size_t pos = 0;
  while (buffer_.size() - pos >= 4) {
    const std::uint16_t protocol = std::uint16_t(buffer_[pos + 2] << 8 | buffer_[pos + 3]);
    if (protocol != 0) {
      // Not Modbus: everything left in this burst is one message.
      out.push_back({std::vector<std::uint8_t>(buffer_.begin() + static_cast<std::ptrdiff_t>(pos), buffer_.end()),
                     false});
      pos = buffer_.size();
      break;
    }
    if (buffer_.size() - pos < kMbapHeaderBytes) break;
    const std::size_t length = std::size_t(buffer_[pos + 4]) << 8 | buffer_[pos + 5];
    if (length == 0) {
      malformed_ = true;
      buffer_.clear();
      throw MalformedStream("MBAP length field is zero");
    }
    const std::size_t total = kMbapHeaderBytes + length;
    if (buffer_.size() - pos < total) break;
    const auto first = buffer_.begin() + static_cast<std::ptrdiff_t>(pos);
    out.push_back({std::vector<std::uint8_t>(first, first + static_cast<std::ptrdiff_t>(total)), true});
    pos += total;
  }
  buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(pos));
  return out;
}

}  // namespace plcguard::relay
