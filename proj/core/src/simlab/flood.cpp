#include "plcguard/simlab/flood.hpp"

#include <sys/socket.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
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

std::vector<double> values_of(const std::vector<FloodRun>& runs, std::uint64_t setting, bool block_time) {
  std::vector<double> v;
  for (const auto& r : runs)
    if (r.setting == setting && !r.failed) v.push_back(block_time ? r.block_time_ms : double(r.allowed_requests));
  return v;
}

}  // namespace

double median_block_time_ms(const std::vector<FloodRun>& runs, std::uint64_t setting) {
  auto v = values_of(runs, setting, true);
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : detect::quantile(std::move(v), 0.5);
}

double median_allowed(const std::vector<FloodRun>& runs, std::uint64_t setting) {
  auto v = values_of(runs, setting, false);
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : detect::quantile(std::move(v), 0.5);
}

std::string FloodReport::to_csv(const std::vector<FloodRun>& runs) {
  std::ostringstream out;
  out << "setting,repetition,allowed_requests,block_time_ms\n";
  char buf[128];
  for (const auto& r : runs) {
    if (r.failed)
      std::snprintf(buf, sizeof buf, "%llu,%zu,%llu,\n", static_cast<unsigned long long>(r.setting), r.repetition,
                    static_cast<unsigned long long>(r.allowed_requests));
    else
      std::snprintf(buf, sizeof buf, "%llu,%zu,%llu,%.4f\n", static_cast<unsigned long long>(r.setting),
                    r.repetition, static_cast<unsigned long long>(r.allowed_requests), r.block_time_ms);
    out << buf;
  }
  return out.str();
}

std::size_t FloodReport::failures() const {
  std::size_t n = 0;
  for (const auto* runs : {&size_sweep, &thread_sweep})
    for (const auto& r : *runs) n += r.failed;
  return n;
}

FloodRun flood_once(std::shared_ptr<const DetectionModels> models, std::uint32_t size, std::size_t threads,
                    const FloodConfig& config) {
  if (size < 200 || size > 2000) throw std::invalid_argument("flood packet size must lie in [200, 2000]");
  if (threads == 0) throw std::invalid_argument("flood needs at least one thread");
  if (config.max_connections == 0) throw std::invalid_argument("max_connections must be positive");
  FloodRun run;

  StubController stub;
  stub.start();
  respond::MemoryBlocklist blocklist;
  respond::IncidentResponder responder(respond::ResponsePolicy::defaults(), blocklist);
  relay::RelayConfig rc;
  rc.listen = {"127.0.0.1", 0};
  rc.upstream = {"127.0.0.1", stub.port()};
  relay::RelayServer server(rc, models, responder);
  server.start();

  const auto ip = attacker_ip(Label::Ex7);
  const net::Endpoint target{"127.0.0.1", server.port()};
  const std::size_t conns = std::min(threads, config.max_connections);
  std::atomic<bool> stop{false};
  std::atomic<std::uint64_t> sent{0};
  std::mutex fds_mutex;
  std::vector<int> fds;

  std::vector<std::thread> workers;
  for (std::size_t c = 0; c < conns; ++c) {
    workers.emplace_back([&, c] {
      const std::size_t streams = threads / conns + (c < threads % conns ? 1 : 0);
      net::Socket sock;
      try {
        sock = net::connect_tcp(target, ip);
        sock.set_nodelay(true);
        {
          std::lock_guard lock(fds_mutex);
          if (stop) return;
          fds.push_back(sock.fd());
        }
        std::vector<std::uint8_t> sink(64 * 1024);
        std::uint16_t tid = static_cast<std::uint16_t>(c << 8);
        while (!stop) {
          for (std::size_t s = 0; s < streams && !stop; ++s) {
            sock.write_all(padded_frame(++tid, size));
            ++sent;
          }
          while (sock.wait_readable(std::chrono::milliseconds(0)))
            if (sock.read_some(sink) == 0) throw std::runtime_error("closed");
        }
      } catch (const std::exception&) {
        // Reset by the relay once the source is blocked.
      }
      // Deregister before the descriptor is closed and can be reused.
      std::lock_guard lock(fds_mutex);
      std::erase(fds, sock.fd());
    });
  }

  const auto deadline = std::chrono::steady_clock::now() + config.timeout;
  while (!blocklist.is_blocked(ip) && std::chrono::steady_clock::now() < deadline)
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  {
    std::lock_guard lock(fds_mutex);
    stop = true;
    for (int fd : fds) ::shutdown(fd, SHUT_RDWR);
  }
  for (auto& w : workers) w.join();
  server.stop();

  run.sent = sent.load();
  run.allowed_requests = server.forwarded_from(ip);
  std::optional<std::int64_t> installed;
  for (const auto& rec : responder.records())
    if (rec.src_ip == ip && rec.block_installed_ts_us) {
      installed = rec.block_installed_ts_us;
      break;
    }
  const auto first = server.first_message_us(ip);
  if (!installed || !first) {
    run.failed = true;
    run.error = !first ? "no attack message reached the relay" : "block not installed before timeout";
    return run;
  }
  run.block_time_ms = std::max<double>(double(*installed - *first), 1.0) / 1000.0;
  return run;
}

FloodReport flood_experiment(std::shared_ptr<const DetectionModels> models, const FloodConfig& config) {
  FloodReport report;
  auto sweep = [&](std::vector<FloodRun>& out, auto setting_of, const auto& settings, auto run_one) {
    for (const auto& s : settings)
      for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
        FloodRun r = run_one(s);
        r.setting = setting_of(s);
        r.repetition = rep;
        if (r.failed) spdlog::warn("flood setting {} repetition {} failed: {}", r.setting, rep, r.error);
        out.push_back(std::move(r));
      }
  };
  sweep(
      report.size_sweep, [](std::uint32_t s) { return std::uint64_t{s}; }, config.sizes,
      [&](std::uint32_t s) { return flood_once(models, s, config.size_sweep_threads, config); });
  sweep(
      report.thread_sweep, [](std::size_t t) { return std::uint64_t{t}; }, config.thread_counts,
      [&](std::size_t t) { return flood_once(models, config.thread_sweep_size, t, config); });
  return report;
}

}  // namespace plcguard::simlab
