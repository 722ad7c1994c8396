#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace oracle {

using namespace plcguard;

namespace {

double dist(const Point2& a, const Point2& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1];
  return std::sqrt(dx * dx + dy * dy);
}

std::vector<std::size_t> knn(const std::vector<Point2>& pts, const Point2& q, std::size_t k, std::size_t skip) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (i != skip) idx.push_back(i);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return dist(pts[a], q) < dist(pts[b], q); });
  idx.resize(k);
  return idx;
}

double lrd_of(const std::vector<Point2>& pts, const Point2& q, const std::vector<std::size_t>& nb,
              const std::vector<double>& kdist) {
  double reach = 0.0;
  for (auto o : nb) reach += std::max(kdist[o], dist(q, pts[o]));
  if (reach <= 0.0) return detect::kLrdCap;
  return std::min(double(nb.size()) / reach, detect::kLrdCap);
}

}  // namespace

std::vector<double> lof_scores(const std::vector<Point2>& train, std::size_t k, const std::vector<Point2>& queries) {
  const std::size_t n = train.size();
  std::vector<std::vector<std::size_t>> nb(n);
  std::vector<double> kdist(n), lrd(n), self(n);
  for (std::size_t i = 0; i < n; ++i) {
    nb[i] = knn(train, train[i], k, i);
    kdist[i] = dist(train[i], train[nb[i].back()]);
  }
  for (std::size_t i = 0; i < n; ++i) lrd[i] = lrd_of(train, train[i], nb[i], kdist);
  auto mean_lrd = [&](const std::vector<std::size_t>& ns) {
    double s = 0.0;
    for (auto o : ns) s += lrd[o];
    return s / double(ns.size());
  };
  for (std::size_t i = 0; i < n; ++i) self[i] = mean_lrd(nb[i]) / lrd[i];

  std::vector<double> out;
  for (const auto& q : queries) {
    const auto ns = knn(train, q, k, SIZE_MAX);
    if (dist(q, train[ns.front()]) == 0.0) {
      out.push_back(self[ns.front()]);
      continue;
    }
    out.push_back(mean_lrd(ns) / lrd_of(train, q, ns, kdist));
  }
  return out;
}

Eigen jacobi(std::vector<std::vector<double>> a, double tol, int max_sweeps) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) (i == j ? scale : off) += a[i][j] * a[i][j];
    if (off <= tol * tol * std::max(scale, 1e-300)) break;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t r = 0; r < n; ++r) {  // A <- A J
          const double arp = a[r][p], arq = a[r][q];
          a[r][p] = c * arp - s * arq;
          a[r][q] = s * arp + c * arq;
        }
        for (std::size_t r = 0; r < n; ++r) {  // A <- J^T A
          const double apr = a[p][r], aqr = a[q][r];
          a[p][r] = c * apr - s * aqr;
          a[q][r] = s * apr + c * aqr;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double vrp = v[r][p], vrq = v[r][q];
          v[r][p] = c * vrp - s * vrq;
          v[r][q] = s * vrp + c * vrq;
        }
      }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
  Eigen e;
  for (auto i : order) {
    e.values.push_back(a[i][i]);
    std::vector<double> col(n);
    for (std::size_t r = 0; r < n; ++r) col[r] = v[r][i];
    e.vectors.push_back(col);
  }
  return e;
}

std::vector<std::vector<double>> covariance(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size(), d = rows.front().size();
  std::vector<double> mean(d, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j] / double(n);
  std::vector<std::vector<double>> c(d, std::vector<double>(d, 0.0));
  for (const auto& r : rows)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
  for (auto& row : c)
    for (auto& x : row) x /= double(n - 1);
  return c;
}

telemetry::FeatureVector batch_features(const std::vector<telemetry::PacketMeta>& packets, std::size_t k,
                                        const std::map<MacAddress, telemetry::BaselineHistogram>& baselines,
                                        std::size_t window, std::int64_t rate_window_us) {
  using telemetry::Feature;
  const auto& cur = packets[k];
  std::set<MacAddress> macs;
  std::set<Ipv4Address> ips;
  std::vector<const telemetry::PacketMeta*> mine;  // this peer's packets up to k
  for (std::size_t i = 0; i <= k; ++i) {
    macs.insert(packets[i].src_mac);
    if (packets[i].src_mac == cur.src_mac) {
      mine.push_back(&packets[i]);
      ips.insert(packets[i].src_ip);
    }
  }

  telemetry::FeatureVector f;
  const double size = cur.frame_len_bytes;
  f[Feature::NPeers] = double(macs.size());
  f[Feature::PacketSize] = size;
  f[Feature::ProtocolEfficiency] = double(cur.payload_len_bytes) / size;

  std::size_t in_rate = 0;
  std::set<std::uint16_t> ports;
  for (const auto* p : mine)
    if (p->timestamp_us >= cur.timestamp_us - rate_window_us) {
      ++in_rate;
      ports.insert(p->src_port);
    }
  f[Feature::MeanFlow] = double(in_rate) / (double(rate_window_us) / 1e6);
  f[Feature::SourcePorts] = double(ports.size());
  f[Feature::ClientsPerMac] = double(ips.size());

  std::int64_t gap = 0, max_gap = 0;
  double max_size = 0.0;
  for (std::size_t i = 0; i < mine.size(); ++i) {
    max_size = std::max(max_size, double(mine[i]->frame_len_bytes));
    if (i > 0) max_gap = std::max(max_gap, mine[i]->timestamp_us - mine[i - 1]->timestamp_us);
  }
  if (mine.size() > 1) gap = mine.back()->timestamp_us - mine[mine.size() - 2]->timestamp_us;
  f[Feature::InterArrival] = double(gap);
  f[Feature::ScaledSize] = size / max_size;
  f[Feature::ScaledInterArrival] = max_gap > 0 ? double(gap) / double(max_gap) : 0.0;

  std::vector<double> w;
  for (std::size_t i = mine.size() > window ? mine.size() - window : 0; i < mine.size(); ++i)
    w.push_back(mine[i]->frame_len_bytes);
  double mean = 0.0;
  for (double x : w) mean += x;
  mean /= double(w.size());
  double var = 0.0;
  for (double x : w) var += (x - mean) * (x - mean);
  var /= double(w.size());
  auto sorted = w;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  f[Feature::MovMean] = mean;
  f[Feature::MovVar] = var;
  f[Feature::MovMedian] = m % 2 ? sorted[m / 2] : (sorted[m / 2 - 1] + sorted[m / 2]) / 2.0;

  // 5 equal bins over [0, 1518]; the top bin is open-ended.
  std::array<double, 5> counts{};
  for (double x : w) counts[std::min<std::size_t>(4, std::size_t(x / (1518.0 / 5.0)))] += 1.0;
  double h = 0.0;
  for (double c : counts)
    if (c > 0) h -= c / double(m) * std::log2(c / double(m));
  f[Feature::SizeEntropy] = h;

  double kl = 0.0;
  if (auto it = baselines.find(cur.src_mac); it != baselines.end()) {
    for (std::size_t b = 0; b < 5; ++b) {
      const double pb = it->second.probabilities[b];
      const double pc = (counts[b] + 1.0) / (double(m) + 5.0);
      if (pb > 0) kl += pb * std::log2(pb / pc);
    }
    kl = std::max(kl, 0.0);
  }
  f[Feature::KlDivergence] = kl;
  return f;
}

std::vector<telemetry::PacketMeta> fuzz_packets(SplitRng& rng, std::size_t n, std::size_t peers) {
  std::vector<std::int64_t> clock(peers, 0);
  std::vector<telemetry::PacketMeta> out;
  std::int64_t global = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = uniform_index(rng, peers);
    // mixture of tight bursts, polling gaps and pauses longer than the rate window
    const double u = uniform01(rng);
    const std::int64_t step = u < 0.5 ? uniform_int(rng, 0, 200)
                              : u < 0.97 ? uniform_int(rng, 1000, 400'000)
                                         : uniform_int(rng, 30'000'000, 90'000'000);
    global += step;
    clock[j] = std::max(clock[j], global);
    telemetry::PacketMeta p;
    p.timestamp_us = clock[j];
    p.src_mac = MacAddress{{0x02, 0, 0, 0, 0, static_cast<std::uint8_t>(j + 1)}};
    p.src_ip = Ipv4Address::from_octets(10, 0, static_cast<std::uint8_t>(j), static_cast<std::uint8_t>(uniform_int(rng, 1, 3)));
    p.src_port = static_cast<std::uint16_t>(40000 + uniform_int(rng, 0, 6));
    p.dst_port = 502;
    const double v = uniform01(rng);
    p.frame_len_bytes = static_cast<std::uint32_t>(v < 0.6 ? uniform_int(rng, 60, 80)
                                                  : v < 0.95 ? uniform_int(rng, 1, 1518)
                                                             : uniform_int(rng, 1518, 9000));
    p.payload_len_bytes = static_cast<std::uint32_t>(uniform_int(rng, 0, p.frame_len_bytes));
    out.push_back(p);
  }
  return out;
}

bool close(double a, double b, double rel) {
  const double diff = std::abs(a - b);
  return diff <= rel * std::max(std::abs(a), std::abs(b)) || diff <= 1e-12;
}

}  // namespace oracle
