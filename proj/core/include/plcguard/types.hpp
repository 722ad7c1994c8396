#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace plcguard {

/// 48-bit link-layer address. Peers are keyed by this value.
struct MacAddress {
  std::array<std::uint8_t, 6> bytes{};

  static MacAddress parse(std::string_view text);
  std::string to_string() const;

  auto operator<=>(const MacAddress&) const = default;
};

/// IPv4 address in host byte order.
struct Ipv4Address {
  std::uint32_t value = 0;

  static Ipv4Address parse(std::string_view text);
  static Ipv4Address from_octets(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d);
  std::string to_string() const;

  auto operator<=>(const Ipv4Address&) const = default;
};

/// Locally administered MAC derived from an IPv4 address (02:00:a:b:c:d).
/// Used whenever the link-layer source is not observable, e.g. above the
/// socket layer in the relay.
MacAddress pseudo_mac(Ipv4Address ip);

/// Traffic class. Normal is the only benign value; the rest are the six
/// attack categories, in their fixed tie-break order.
enum class Label : std::uint8_t { Normal = 0, Ex1, Ex2, Ex3, Ex4, Ex6, Ex7 };

inline constexpr std::array<Label, 6> kAttackLabels = {Label::Ex1, Label::Ex2, Label::Ex3,
                                                       Label::Ex4, Label::Ex6, Label::Ex7};
inline constexpr std::array<Label, 7> kAllLabels = {Label::Normal, Label::Ex1, Label::Ex2, Label::Ex3,
                                                    Label::Ex4,    Label::Ex6, Label::Ex7};

constexpr bool is_attack(Label l) { return l != Label::Normal; }

std::string_view to_string(Label l);
/// Accepts "Normal", "EX-1".."EX-7" (case-insensitive, dash optional).
std::optional<Label> parse_label(std::string_view text);
Label label_from_string(std::string_view text);  // throws std::invalid_argument

/// Monotonic microseconds. All latency and block-time measurements share
/// this clock.
std::int64_t monotonic_us();

}  // namespace plcguard
