#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "plcguard/models.hpp"

namespace plcguard::simlab {

struct FloodConfig {
  std::vector<std::uint32_t> sizes{200, 400, 600, 800, 1000, 1200, 1400, 1600, 1800, 2000};
  std::size_t size_sweep_threads = 500;
  std::vector<std::size_t> thread_counts{100, 500, 1000, 2000, 5000, 10000};
  std::uint32_t thread_sweep_size = 1200;
  std::size_t repetitions = 10;
  /// Logical sender threads are multiplexed onto at most this many
  /// connections from the attacker address.
  std::size_t max_connections = 64;
  std::chrono::milliseconds timeout{10000};
  std::uint64_t seed = 1;
};

struct FloodRun {
  std::uint64_t setting = 0;  // packet size or thread count
  std::size_t repetition = 0;
  std::uint64_t allowed_requests = 0;
  double block_time_ms = 0.0;
  std::uint64_t sent = 0;
  bool failed = false;
  std::string error;
};

struct FloodReport {
  std::vector<FloodRun> size_sweep;
  std::vector<FloodRun> thread_sweep;

  /// setting,repetition,allowed_requests,block_time_ms. Failed runs have
  /// an empty block_time_ms.
  static std::string to_csv(const std::vector<FloodRun>& runs);
  std::size_t failures() const;
};

/// Median over the non-failed runs of one setting; NaN when there are none.
double median_block_time_ms(const std::vector<FloodRun>& runs, std::uint64_t setting);
double median_allowed(const std::vector<FloodRun>& runs, std::uint64_t setting);

/// One repetition: fresh stub controller, responder and relay, then a
/// flood of `threads` logical senders with `size`-byte messages until the
/// attacker is blocked or the timeout expires.
FloodRun flood_once(std::shared_ptr<const DetectionModels> models, std::uint32_t size, std::size_t threads,
                    const FloodConfig& config);

FloodReport flood_experiment(std::shared_ptr<const DetectionModels> models, const FloodConfig& config = {});

}  // namespace plcguard::simlab
