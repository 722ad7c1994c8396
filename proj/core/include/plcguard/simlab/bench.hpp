#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "plcguard/models.hpp"

namespace plcguard::simlab {

inline constexpr std::string_view kWithIds = "with_ids";
inline constexpr std::string_view kWithoutIds = "without_ids";

struct BenchConfig {
  std::size_t cycles = 500;
  /// Pacing between a client's requests; matches the benign generator.
  double poll_interval_ms = 50.0;
  std::uint64_t seed = 1;
  /// A request still unanswered at the next poll tick, or after this
  /// long, is counted as lost.
  std::chrono::milliseconds response_timeout{2000};
};

struct BenchRow {
  std::uint8_t function = 0;
  std::string config;
  std::size_t samples = 0;
  std::size_t lost = 0;  // requests the relay dropped
  double mean_us = 0.0;
  double std_us = 0.0;
  double median_us = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;  // 8 functions x {without_ids, with_ids}
  /// Round-trip samples per (config, function), in cycle order.
  std::map<std::string, std::map<std::uint8_t, std::vector<double>>> samples;
  bool valid = true;
  std::vector<std::string> errors;
  std::uint64_t relay_forwarded = 0;
  std::uint64_t relay_dropped = 0;

  const BenchRow* find(std::uint8_t function, std::string_view config) const;
  /// median(with) - median(without) for one function.
  double median_overhead_us(std::uint8_t function) const;
  /// Same over all samples of all functions.
  double pooled_median_overhead_us() const;
  /// function,config,mean_us,std_us,median_us
  std::string to_csv() const;
};

/// Times request/response round trips for the eight benchmark functions,
/// first directly against a stub controller and then through a relay
/// loaded with `models`. One concurrent client per function, each bound
/// to its benign peer address. The relay answers incidents with a log-only
/// policy, so a false positive costs one lost cycle rather than the client.
/// A failed connection marks the report invalid and keeps what was measured.
BenchReport bench_latency(std::shared_ptr<const DetectionModels> models, const BenchConfig& config = {});

}  // namespace plcguard::simlab
