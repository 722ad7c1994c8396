#include "plcguard/types.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdio>

namespace plcguard {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

}  // namespace

MacAddress MacAddress::parse(std::string_view text) {
  MacAddress mac;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    if (i > 0) {
      if (pos >= text.size() || (text[pos] != ':' && text[pos] != '-'))
        throw std::invalid_argument("bad MAC address: " + std::string(text));
      ++pos;
    }
    if (pos + 2 > text.size()) throw std::invalid_argument("bad MAC address: " + std::string(text));
    int hi = hex_value(text[pos]);
    int lo = hex_value(text[pos + 1]);
    if (hi < 0 || lo < 0) throw std::invalid_argument("bad MAC address: " + std::string(text));
    mac.bytes[i] = static_cast<std::uint8_t>(hi * 16 + lo);
    pos += 2;
  }
  if (pos != text.size()) throw std::invalid_argument("bad MAC address: " + std::string(text));
  return mac;
}

std::string MacAddress::to_string() const {
  char buf[18];
  std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", bytes[0], bytes[1], bytes[2], bytes[3],
                bytes[4], bytes[5]);
  return buf;
}

Ipv4Address Ipv4Address::parse(std::string_view text) {
  std::uint32_t value = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int i = 0; i < 4; ++i) {
    if (i > 0) {
      if (p == end || *p != '.') throw std::invalid_argument("bad IPv4 address: " + std::string(text));
      ++p;
    }
    unsigned octet = 0;
    auto [next, ec] = std::from_chars(p, end, octet);
    if (ec != std::errc{} || next == p || octet > 255)
      throw std::invalid_argument("bad IPv4 address: " + std::string(text));
    value = (value << 8) | octet;
    p = next;
  }
  if (p != end) throw std::invalid_argument("bad IPv4 address: " + std::string(text));
  return Ipv4Address{value};
}

Ipv4Address Ipv4Address::from_octets(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
  return Ipv4Address{(std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d};
}

std::string Ipv4Address::to_string() const {
  return std::to_string(value >> 24) + '.' + std::to_string((value >> 16) & 0xff) + '.' +
         std::to_string((value >> 8) & 0xff) + '.' + std::to_string(value & 0xff);
}

MacAddress pseudo_mac(Ipv4Address ip) {
  return MacAddress{{0x02, 0x00, static_cast<std::uint8_t>(ip.value >> 24),
                     static_cast<std::uint8_t>(ip.value >> 16), static_cast<std::uint8_t>(ip.value >> 8),
                     static_cast<std::uint8_t>(ip.value)}};
}

std::string_view to_string(Label l) {
  switch (l) {
    case Label::Normal: return "Normal";
    case Label::Ex1: return "EX-1";
    case Label::Ex2: return "EX-2";
    case Label::Ex3: return "EX-3";
    case Label::Ex4: return "EX-4";
    case Label::Ex6: return "EX-6";
    case Label::Ex7: return "EX-7";
  }
  return "?";
}

std::optional<Label> parse_label(std::string_view text) {
  std::string norm;
  for (char c : text) {
    if (c == '-' || c == '_' || c == ' ') continue;
    norm.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (norm == "normal" || norm == "benign") return Label::Normal;
  if (norm == "ex1") return Label::Ex1;
  if (norm == "ex2") return Label::Ex2;
  if (norm == "ex3") return Label::Ex3;
  if (norm == "ex4") return Label::Ex4;
  if (norm == "ex6") return Label::Ex6;
  if (norm == "ex7") return Label::Ex7;
  return std::nullopt;
}

Label label_from_string(std::string_view text) {
  if (auto l = parse_label(text)) return *l;
  throw std::invalid_argument("unknown label: " + std::string(text));
}

std::int64_t monotonic_us() {
  using namespace std::chrono;
  return duration_cast<microseconds>(steady_clock::now().time_since_epoch()).count();
}

}  // namespace plcguard
