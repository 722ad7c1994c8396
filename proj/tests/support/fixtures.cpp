#include "fixtures.hpp"

#include <map>

#include <spdlog/spdlog.h>

#include "plcguard/rng.hpp"
#include "plcguard/simlab/modbus.hpp"
#include "plcguard/simlab/scenario.hpp"

namespace fixtures {

using namespace plcguard;

const Trained& trained(double scale, std::uint64_t seed, std::size_t tune_repeats) {
  static std::mutex mutex;
  static std::map<std::tuple<double, std::uint64_t, std::size_t>, std::unique_ptr<Trained>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{scale, seed, tune_repeats}];
  if (!slot) {
    spdlog::set_level(spdlog::level::warn);
    simlab::CorpusConfig cc;
    cc.scale = scale;
    cc.seed = seed;
    auto t = std::make_unique<Trained>();
    t->corpus = simlab::build_corpus(cc);
    TrainConfig tc;
    tc.seed = seed;
    tc.tune.repeats = tune_repeats;
    t->result = train_models(t->corpus.baseline, t->corpus.train, t->corpus.external, t->corpus.baselines, tc);
    t->models = std::make_shared<const DetectionModels>(t->result.models);
    slot = std::move(t);
  }
  return *slot;
}

RecordingUpstream::RecordingUpstream() : listener_("127.0.0.1", 0) {
  acceptor_ = std::thread([this] { accept_loop(); });
}

RecordingUpstream::~RecordingUpstream() {
  stopping_ = true;
  acceptor_.join();
  for (auto& c : conns_)
    if (c.thread.joinable()) c.thread.join();
}

void RecordingUpstream::accept_loop() {
  while (!stopping_) {
    auto s = listener_.accept(std::chrono::milliseconds(50));
    if (!s) continue;
    std::lock_guard lock(mutex_);
    auto& c = conns_.emplace_back();
    c.thread = std::thread([this, &c, sock = std::move(*s)]() mutable { serve(std::move(sock), c); });
    cv_.notify_all();
  }
}

void RecordingUpstream::serve(net::Socket s, Conn& c) {
  std::vector<std::uint8_t> pending;
  std::vector<std::uint8_t> buf(64 * 1024);
  while (!stopping_) {
    if (!s.wait_readable(std::chrono::milliseconds(50))) continue;
    std::size_t n = 0;
    try {
      n = s.read_some(buf);
    } catch (const std::exception&) {
      return;
    }
    if (n == 0) return;
    {
      std::lock_guard lock(mutex_);
      c.in.insert(c.in.end(), buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(n));
    }
    pending.insert(pending.end(), buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(n));
    while (pending.size() >= 6) {
      const std::size_t len = std::size_t(pending[4]) << 8 | pending[5];
      if (pending.size() < 6 + len) break;
      const std::vector<std::uint8_t> frame(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(6 + len));
      pending.erase(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(6 + len));
      const auto resp = map_.handle(frame);
      try {
        s.write_all(resp);
      } catch (const std::exception&) {
        return;
      }
      std::lock_guard lock(mutex_);
      c.out.insert(c.out.end(), resp.begin(), resp.end());
    }
  }
}

std::size_t RecordingUpstream::connections() const {
  std::lock_guard lock(mutex_);
  return conns_.size();
}

bool RecordingUpstream::wait_for_connections(std::size_t n, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  return cv_.wait_for(lock, timeout, [&] { return conns_.size() >= n; });
}

std::vector<std::uint8_t> RecordingUpstream::received(std::size_t conn) const {
  std::lock_guard lock(mutex_);
  auto it = conns_.begin();
  std::advance(it, static_cast<std::ptrdiff_t>(conn));
  return it->in;
}

std::vector<std::uint8_t> RecordingUpstream::sent(std::size_t conn) const {
  std::lock_guard lock(mutex_);
  auto it = conns_.begin();
  std::advance(it, static_cast<std::ptrdiff_t>(conn));
  return it->out;
}

std::size_t RecordingUpstream::total_received_bytes() const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& c : conns_) n += c.in.size();
  return n;
}

}  // namespace fixtures

namespace fixtures {

ClientSession run_benign_client(std::uint16_t port, std::size_t j, std::size_t messages, std::uint64_t seed,
                                std::chrono::milliseconds drain) {
  using Clock = std::chrono::steady_clock;
  ClientSession out;
  try {
    auto sock = net::connect_tcp({"127.0.0.1", port}, simlab::benign_peer_ip(j));
    sock.set_nodelay(true);
    simlab::BenignRequestSource source(simlab::kBenchFunctions[j % simlab::kBenchFunctions.size()],
                                       derive_seed(seed, 2000 + j));
    SplitRng pacing(derive_seed(seed, 1000 + j));
    std::vector<std::uint8_t> buf(64 * 1024);
    bool open = true;
    auto read_until = [&](Clock::time_point until) {
      while (open) {
        const auto left = std::chrono::ceil<std::chrono::milliseconds>(until - Clock::now());
        if (left.count() <= 0 || !sock.wait_readable(left)) return;
        const auto n = sock.read_some(buf);
        if (n == 0) open = false;
        out.received.insert(out.received.end(), buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(n));
      }
    };
    auto tick = Clock::now();
    for (std::size_t i = 0; i < messages && open; ++i) {
      out.sent.push_back(source.next());
      sock.write_all(out.sent.back());
      tick += std::chrono::microseconds(simlab::benign_gap_us(pacing, 50.0));
      read_until(tick);
    }
    read_until(Clock::now() + drain);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace fixtures
