#include "plcguard/simlab/bench.hpp"

#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "plcguard/lof.hpp"
#include "plcguard/relay.hpp"
#include "plcguard/respond.hpp"
#include "plcguard/simlab/scenario.hpp"
#include "plcguard/simlab/stub_controller.hpp"

namespace plcguard::simlab {

namespace {

struct ClientResult {
  std::vector<double> rtt_us;
  std::size_t lost = 0;
  std::string error;
};

std::uint16_t transaction_of(std::span<const std::uint8_t> frame) {
  return static_cast<std::uint16_t>(frame[0] << 8 | frame[1]);
}

ClientResult run_client(std::size_t j, const net::Endpoint& target, const BenchConfig& config) {
  ClientResult out;
  const std::uint8_t fc = kBenchFunctions[j];
  try {
    auto sock = net::connect_tcp(target, benign_peer_ip(j));
    sock.set_nodelay(true);
    sock.set_receive_timeout(config.response_timeout);
    auto read_exact = [&](std::span<std::uint8_t> b) { return sock.read_exact(b); };
    BenignRequestSource source(fc, derive_seed(config.seed, 2000 + j));
    SplitRng pacing(derive_seed(config.seed, 1000 + j));

    // Responses to dropped requests never arrive, so match on transaction id
    // and give up at the next poll tick; the schedule never slips.
    using Clock = std::chrono::steady_clock;
    auto round_trip = [&](const Bytes& request, Clock::time_point deadline) -> std::optional<double> {
      const auto t0 = Clock::now();
      sock.write_all(request);
      while (true) {
        const auto left = std::chrono::ceil<std::chrono::milliseconds>(deadline - Clock::now());
        if (left.count() <= 0 || !sock.wait_readable(left)) return std::nullopt;
        const auto frame = read_frame(read_exact);
        if (!frame) throw std::runtime_error("connection closed");
        if (transaction_of(*frame) == transaction_of(request))
          return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
      }
    };

    // Cycle 0 is the opening status read: part of the session, not timed.
    auto tick = Clock::now();
    for (std::size_t c = 0; c <= config.cycles; ++c) {
      std::this_thread::sleep_until(tick);
      const auto request = source.next();
      tick += std::chrono::microseconds(benign_gap_us(pacing, config.poll_interval_ms));
      const auto rtt = round_trip(request, std::min(tick, Clock::now() + config.response_timeout));
      if (!rtt) ++out.lost;
      else if (c > 0) out.rtt_us.push_back(*rtt);
    }
  } catch (const std::exception& e) {
    out.error = std::string(function_name(fc)) + ": " + e.what();
  }
  return out;
}

void run_config(BenchReport& report, std::string_view config_name, const net::Endpoint& target,
                const BenchConfig& config) {
  std::vector<ClientResult> results(kBenchFunctions.size());
  std::vector<std::thread> clients;
  for (std::size_t j = 0; j < kBenchFunctions.size(); ++j)
    clients.emplace_back([&, j] { results[j] = run_client(j, target, config); });
  for (auto& t : clients) t.join();

  for (std::size_t j = 0; j < kBenchFunctions.size(); ++j) {
    auto& r = results[j];
    if (!r.error.empty()) {
      report.valid = false;
      report.errors.push_back(std::string(config_name) + " " + r.error);
    }
    BenchRow row;
    row.function = kBenchFunctions[j];
    row.config = std::string(config_name);
    row.samples = r.rtt_us.size();
    row.lost = r.lost;
    if (!r.rtt_us.empty()) {
      const double n = double(r.rtt_us.size());
      row.mean_us = std::accumulate(r.rtt_us.begin(), r.rtt_us.end(), 0.0) / n;
      double ss = 0.0;
      for (double v : r.rtt_us) ss += (v - row.mean_us) * (v - row.mean_us);
      row.std_us = r.rtt_us.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
      row.median_us = detect::quantile(r.rtt_us, 0.5);
    }
    report.rows.push_back(row);
    report.samples[row.config][row.function] = std::move(r.rtt_us);
  }
}

}  // namespace

const BenchRow* BenchReport::find(std::uint8_t function, std::string_view config) const {
  for (const auto& r : rows)
    if (r.function == function && r.config == config) return &r;
  return nullptr;
}

double BenchReport::median_overhead_us(std::uint8_t function) const {
  const auto* with = find(function, kWithIds);
  const auto* without = find(function, kWithoutIds);
  if (!with || !without || with->samples == 0 || without->samples == 0)
    throw std::runtime_error("bench report has no samples for " + std::string(function_name(function)));
  return with->median_us - without->median_us;
}

double BenchReport::pooled_median_overhead_us() const {
  auto pooled = [&](std::string_view config) {
    std::vector<double> all;
    auto it = samples.find(std::string(config));
    if (it != samples.end())
      for (const auto& [fc, v] : it->second) all.insert(all.end(), v.begin(), v.end());
    if (all.empty()) throw std::runtime_error("bench report has no samples for " + std::string(config));
    return detect::quantile(std::move(all), 0.5);
  };
  return pooled(kWithIds) - pooled(kWithoutIds);
}

std::string BenchReport::to_csv() const {
  std::ostringstream out;
  out << "function,config,mean_us,std_us,median_us\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.3f,%.3f,%.3f\n", std::string(function_name(r.function)).c_str(),
                  r.config.c_str(), r.mean_us, r.std_us, r.median_us);
    out << buf;
  }
  return out.str();
}

BenchReport bench_latency(std::shared_ptr<const DetectionModels> models, const BenchConfig& config) {
  if (!models) throw std::invalid_argument("bench_latency needs models");
  if (config.cycles == 0) throw std::invalid_argument("bench_latency: cycles must be positive");
  BenchReport report;
  {
    StubController stub;
    stub.start();
    run_config(report, kWithoutIds, {"127.0.0.1", stub.port()}, config);
  }
  {
    StubController stub;
    stub.start();
    respond::MemoryBlocklist blocklist;
    respond::ResponsePolicy log_only;
    log_only.default_action = {respond::ActionKind::LogOnly};
    respond::IncidentResponder responder(log_only, blocklist);
    relay::RelayConfig rc;
    rc.listen = {"127.0.0.1", 0};
    rc.upstream = {"127.0.0.1", stub.port()};
    relay::RelayServer server(rc, models, responder);
    server.start();
    run_config(report, kWithIds, {"127.0.0.1", server.port()}, config);
    server.stop();
    const auto s = server.stats();
    report.relay_forwarded = s.forwarded;
    report.relay_dropped = s.dropped;
  }
  for (const auto& e : report.errors) spdlog::warn("bench: {}", e);
  return report;
}

}  // namespace plcguard::simlab
