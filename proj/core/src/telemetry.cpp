#include "plcguard/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace plcguard::telemetry {

std::optional<std::size_t> feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureCount; ++i)
    if (kFeatureNames[i] == name) return i;
  return std::nullopt;
}

std::size_t bin_index(double size, const BinEdges& edges) {
  for (std::size_t b = 1; b < kSizeBins; ++b)
    if (size < edges[b]) return b - 1;
  return kSizeBins - 1;
}

WindowStats window_stats(std::span<const double> window) {
  if (window.empty()) throw std::invalid_argument("window_stats: empty window");
  const double n = static_cast<double>(window.size());
  double sum = 0.0;
  for (double v : window) sum += v;
  WindowStats s;
  s.mean = sum / n;
  double sq = 0.0;
  for (double v : window) sq += (v - s.mean) * (v - s.mean);
  s.variance = sq / n;

  std::vector<double> sorted(window.begin(), window.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return s;
}

namespace {

std::array<std::uint32_t, kSizeBins> bin_counts(std::span<const double> window, const BinEdges& edges) {
  std::array<std::uint32_t, kSizeBins> counts{};
  for (double v : window) ++counts[bin_index(v, edges)];
  return counts;
}

}  // namespace

double entropy_from_counts(const std::array<std::uint32_t, kSizeBins>& counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return std::max(h, 0.0);
}

std::array<double, kSizeBins> smoothed_probabilities(const std::array<std::uint32_t, kSizeBins>& counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  const double denom = static_cast<double>(total + kSizeBins);
  std::array<double, kSizeBins> p{};
  for (std::size_t b = 0; b < kSizeBins; ++b) p[b] = (static_cast<double>(counts[b]) + 1.0) / denom;
  return p;
}

double kl_from_counts(const std::array<double, kSizeBins>& base,
                      const std::array<std::uint32_t, kSizeBins>& counts) {
  const auto current = smoothed_probabilities(counts);
  double d = 0.0;
  for (std::size_t b = 0; b < kSizeBins; ++b) {
    if (base[b] <= 0.0) continue;
    d += base[b] * std::log2(base[b] / current[b]);
  }
  // Rounding can leave a tiny negative value for identical distributions.
  return std::max(d, 0.0);
}

double size_entropy(std::span<const double> window, const BinEdges& edges) {
  if (window.empty()) throw std::invalid_argument("size_entropy: empty window");
  return entropy_from_counts(bin_counts(window, edges));
}

double kl_divergence(const BaselineHistogram& base, std::span<const double> window) {
  if (window.empty()) throw std::invalid_argument("kl_divergence: empty window");
  return kl_from_counts(base.probabilities, bin_counts(window, base.bin_edges));
}

BaselineFit fit_baseline(std::span<const PacketMeta> benign_packets, std::size_t min_packets,
                         const BinEdges& edges) {
  std::map<MacAddress, std::array<std::uint32_t, kSizeBins>> counts;
  std::map<MacAddress, std::size_t> totals;
  for (const auto& p : benign_packets) {
    ++counts[p.src_mac][bin_index(static_cast<double>(p.frame_len_bytes), edges)];
    ++totals[p.src_mac];
  }
  BaselineFit fit;
  for (const auto& [mac, c] : counts) {
    if (totals[mac] < min_packets) {
      fit.excluded.emplace_back(mac, totals[mac]);
      continue;
    }
    BaselineHistogram h;
    h.peer = mac;
    h.bin_edges = edges;
    h.probabilities = smoothed_probabilities(c);
    fit.baselines.emplace(mac, h);
  }
  return fit;
}

// Incremental per-peer state. Window moments are kept as exact integer sums
// so streamed values agree with a from-scratch recomputation.
struct TelemetrySensor::PeerState {
  std::deque<std::uint32_t> size_window;
  std::vector<std::uint32_t> sorted_window;
  std::int64_t window_sum = 0;
  std::int64_t window_sumsq = 0;
  std::array<std::uint32_t, kSizeBins> window_bins{};

  std::optional<std::int64_t> last_arrival_us;
  std::uint32_t max_size_bytes = 0;
  std::int64_t max_gap_us = 0;

  std::deque<std::pair<std::int64_t, std::uint16_t>> recent;  // (timestamp, source port)
  std::map<std::uint16_t, std::uint32_t> recent_ports;
  std::uint64_t packet_count = 0;
};

TelemetrySensor::TelemetrySensor(SensorConfig config) : config_(config) {
  if (config_.window_packets == 0) throw std::invalid_argument("window_packets must be positive");
}

TelemetrySensor::~TelemetrySensor() = default;

void TelemetrySensor::set_baselines(std::map<MacAddress, BaselineHistogram> baselines) {
  for (const auto& [mac, h] : baselines)
    if (h.bin_edges != config_.bin_edges)
      throw std::invalid_argument("baseline for " + mac.to_string() + " uses different bin edges");
  std::lock_guard lock(mutex_);
  baselines_ = std::move(baselines);
}

Observation TelemetrySensor::ingest(const PacketMeta& packet) {
  std::lock_guard lock(mutex_);
  auto it = baselines_.find(packet.src_mac);
  return ingest_locked(packet, it == baselines_.end() ? nullptr : &it->second);
}

Observation TelemetrySensor::ingest(const PacketMeta& packet, const BaselineHistogram* baseline) {
  std::lock_guard lock(mutex_);
  return ingest_locked(packet, baseline);
}

std::size_t TelemetrySensor::peer_count() const {
  std::lock_guard lock(mutex_);
  return peers_.size();
}

std::size_t TelemetrySensor::ips_for(const MacAddress& mac) const {
  std::lock_guard lock(mutex_);
  auto it = mac_to_ips_.find(mac);
  return it == mac_to_ips_.end() ? 0 : it->second.size();
}

Observation TelemetrySensor::ingest_locked(const PacketMeta& packet, const BaselineHistogram* baseline) {
  if (packet.frame_len_bytes < 1) throw MalformedPacket("frame length must be at least 1 byte");
  if (packet.payload_len_bytes > packet.frame_len_bytes)
    throw MalformedPacket("payload length " + std::to_string(packet.payload_len_bytes) +
                          " exceeds frame length " + std::to_string(packet.frame_len_bytes));
  auto found = peers_.find(packet.src_mac);
  if (found != peers_.end() && found->second->last_arrival_us &&
      packet.timestamp_us < *found->second->last_arrival_us)
    throw MalformedPacket("timestamp goes backwards for peer " + packet.src_mac.to_string());
  if (baseline && baseline->bin_edges != config_.bin_edges)
    throw std::invalid_argument("baseline bin edges differ from sensor bin edges");

  if (found == peers_.end()) found = peers_.emplace(packet.src_mac, std::make_unique<PeerState>()).first;
  PeerState& peer = *found->second;
  auto& ips = mac_to_ips_[packet.src_mac];
  ips.insert(packet.src_ip);

  const std::int64_t now = packet.timestamp_us;
  const std::uint32_t size = packet.frame_len_bytes;

  const std::int64_t gap = peer.last_arrival_us ? now - *peer.last_arrival_us : 0;
  peer.last_arrival_us = now;
  peer.max_gap_us = std::max(peer.max_gap_us, gap);
  peer.max_size_bytes = std::max(peer.max_size_bytes, size);
  ++peer.packet_count;

  peer.size_window.push_back(size);
  peer.window_sum += size;
  peer.window_sumsq += std::int64_t{size} * size;
  peer.sorted_window.insert(std::upper_bound(peer.sorted_window.begin(), peer.sorted_window.end(), size),
                            size);
  ++peer.window_bins[bin_index(size, config_.bin_edges)];
  if (peer.size_window.size() > config_.window_packets) {
    const std::uint32_t old = peer.size_window.front();
    peer.size_window.pop_front();
    peer.window_sum -= old;
    peer.window_sumsq -= std::int64_t{old} * old;
    peer.sorted_window.erase(std::lower_bound(peer.sorted_window.begin(), peer.sorted_window.end(), old));
    --peer.window_bins[bin_index(old, config_.bin_edges)];
  }

  peer.recent.emplace_back(now, packet.src_port);
  ++peer.recent_ports[packet.src_port];
  while (!peer.recent.empty() && peer.recent.front().first < now - config_.rate_window_us) {
    auto port = peer.recent.front().second;
    peer.recent.pop_front();
    if (--peer.recent_ports[port] == 0) peer.recent_ports.erase(port);
  }

  Observation obs;
  obs.timestamp_us = now;
  obs.peer = packet.src_mac;
  auto& f = obs.features;
  const auto n = static_cast<std::int64_t>(peer.size_window.size());
  f[Feature::NPeers] = static_cast<double>(peers_.size());
  f[Feature::PacketSize] = size;
  f[Feature::ProtocolEfficiency] = static_cast<double>(packet.payload_len_bytes) / size;
  f[Feature::MeanFlow] = static_cast<double>(peer.recent.size()) / (static_cast<double>(config_.rate_window_us) / 1e6);
  f[Feature::InterArrival] = static_cast<double>(gap);
  f[Feature::MovMean] = static_cast<double>(peer.window_sum) / static_cast<double>(n);
  f[Feature::MovVar] = static_cast<double>(n * peer.window_sumsq - peer.window_sum * peer.window_sum) /
                       static_cast<double>(n * n);
  const auto& sw = peer.sorted_window;
  f[Feature::MovMedian] = sw.size() % 2 == 1 ? sw[sw.size() / 2]
                                             : 0.5 * (static_cast<double>(sw[sw.size() / 2 - 1]) + sw[sw.size() / 2]);
  f[Feature::ScaledSize] = static_cast<double>(size) / peer.max_size_bytes;
  f[Feature::ScaledInterArrival] =
      peer.max_gap_us > 0 ? static_cast<double>(gap) / static_cast<double>(peer.max_gap_us) : 0.0;
  f[Feature::SourcePorts] = static_cast<double>(peer.recent_ports.size());
  f[Feature::ClientsPerMac] = static_cast<double>(ips.size());
  f[Feature::SizeEntropy] = entropy_from_counts(peer.window_bins);
  if (baseline) {
    f[Feature::KlDivergence] = kl_from_counts(baseline->probabilities, peer.window_bins);
  } else {
    f[Feature::KlDivergence] = 0.0;
    obs.baseline_absent = true;
  }
  return obs;
}

}  // namespace plcguard::telemetry
