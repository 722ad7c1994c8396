#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "plcguard/types.hpp"

namespace plcguard::telemetry {

enum class Transport : std::uint8_t { Tcp, Udp };

/// L2-L4 header snapshot of one inbound packet.
struct PacketMeta {
  std::int64_t timestamp_us = 0;
  MacAddress src_mac;
  Ipv4Address src_ip;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint32_t frame_len_bytes = 0;
  std::uint32_t payload_len_bytes = 0;
  Transport transport = Transport::Tcp;
};

/// Column order of the 14 telemetry features. Also the CSV column order.
enum class Feature : std::size_t {
  NPeers = 0,
  PacketSize,
  ProtocolEfficiency,
  MeanFlow,
  InterArrival,
  MovMean,
  MovVar,
  MovMedian,
  ScaledSize,
  ScaledInterArrival,
  SourcePorts,
  ClientsPerMac,
  SizeEntropy,
  KlDivergence,
};

inline constexpr std::size_t kFeatureCount = 14;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "n_peers",  "packet_size", "protocol_efficiency", "mean_flow", "inter_arrival_us",
    "mov_mean", "mov_var",     "mov_median",          "scaled_size", "scaled_dt",
    "src_ports", "clients_per_mac", "entropy_bits",   "kl_bits"};

std::optional<std::size_t> feature_index(std::string_view name);

using FeatureArray = std::array<double, kFeatureCount>;

struct FeatureVector {
  FeatureArray values{};

  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
};

/// One emitted sensor record.
struct Observation {
  std::int64_t timestamp_us = 0;
  MacAddress peer;
  FeatureVector features;
  /// KL was reported as 0 because no baseline exists for this peer.
  bool baseline_absent = false;
};

inline constexpr std::size_t kSizeBins = 5;
using BinEdges = std::array<double, kSizeBins + 1>;

/// Five equal-width bins over [0, 1518] bytes.
inline constexpr BinEdges kDefaultBinEdges = {0.0, 303.6, 607.2, 910.8, 1214.4, 1518.0};

/// Half-open bins [e_b, e_{b+1}); values below the first edge land in bin 0
/// and values at or above the last interior edge land in the last bin.
std::size_t bin_index(double size, const BinEdges& edges);

struct BaselineHistogram {
  MacAddress peer;
  BinEdges bin_edges = kDefaultBinEdges;
  std::array<double, kSizeBins> probabilities{};
};

struct WindowStats {
  double mean = 0.0;
  double variance = 0.0;
  double median = 0.0;
};

/// Population mean/variance and median of a non-empty window.
/// Throws std::invalid_argument on an empty window.
WindowStats window_stats(std::span<const double> window);

/// Shannon entropy (bits) of the binned window.
double size_entropy(std::span<const double> window, const BinEdges& edges = kDefaultBinEdges);

/// sum_b P_base(b) log2(P_base(b) / p_cur(b)), with add-one smoothing on the
/// current-window counts.
double kl_divergence(const BaselineHistogram& base, std::span<const double> window);

double entropy_from_counts(const std::array<std::uint32_t, kSizeBins>& counts);
double kl_from_counts(const std::array<double, kSizeBins>& base,
                      const std::array<std::uint32_t, kSizeBins>& counts);

/// Add-one smoothed probabilities from raw bin counts.
std::array<double, kSizeBins> smoothed_probabilities(const std::array<std::uint32_t, kSizeBins>& counts);

struct BaselineFit {
  std::map<MacAddress, BaselineHistogram> baselines;
  /// Peers below the minimum packet count, with their counts.
  std::vector<std::pair<MacAddress, std::size_t>> excluded;
};

BaselineFit fit_baseline(std::span<const PacketMeta> benign_packets, std::size_t min_packets = 100,
                         const BinEdges& edges = kDefaultBinEdges);

class MalformedPacket : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SensorConfig {
  std::size_t window_packets = 1000;
  std::int64_t rate_window_us = 60'000'000;
  BinEdges bin_edges = kDefaultBinEdges;
};

/// Stateful per-peer sensor turning packet headers into feature vectors.
/// Thread-safe: concurrent ingest calls are serialised internally.
class TelemetrySensor {
 public:
  explicit TelemetrySensor(SensorConfig config = {});
  ~TelemetrySensor();
  TelemetrySensor(const TelemetrySensor&) = delete;
  TelemetrySensor& operator=(const TelemetrySensor&) = delete;

  void set_baselines(std::map<MacAddress, BaselineHistogram> baselines);

  /// Uses the registered baseline for the packet's peer, if any.
  Observation ingest(const PacketMeta& packet);
  /// Uses the supplied baseline (may be null) instead of the registry.
  Observation ingest(const PacketMeta& packet, const BaselineHistogram* baseline);

  std::size_t peer_count() const;
  std::size_t ips_for(const MacAddress& mac) const;
  const SensorConfig& config() const { return config_; }

 private:
  struct PeerState;
  Observation ingest_locked(const PacketMeta& packet, const BaselineHistogram* baseline);

  SensorConfig config_;
  mutable std::mutex mutex_;
  std::map<MacAddress, std::unique_ptr<PeerState>> peers_;
  std::map<MacAddress, std::set<Ipv4Address>> mac_to_ips_;
  std::map<MacAddress, BaselineHistogram> baselines_;
};

}  // namespace plcguard::telemetry
