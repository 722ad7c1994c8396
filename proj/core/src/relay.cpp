#include "plcguard/relay.hpp"

#include <csignal>
#include <nlohmann/json.hpp>
#include <poll.h>
#include <spdlog/spdlog.h>
#include <sstream>

#include "plcguard/framing.hpp"

namespace plcguard::relay {

using nlohmann::json;

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

RelayConfig RelayConfig::parse(const std::string& text) {
  RelayConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "listen") c.listen = net::Endpoint::parse(value);
    else if (key == "upstream") c.upstream = net::Endpoint::parse(value);
    else if (key == "models") c.models_path = value;
    else if (key == "policy") c.policy_path = value;
    else if (key == "log") c.decision_log = value;
    else if (key == "incident_log") c.incident_log = value;
    else if (key == "block_cmd") c.block_cmd = value;
    else if (key == "max_sessions") c.max_sessions = std::stoul(value);
    else if (key == "idle_timeout_s") c.idle_timeout_s = std::stoi(value);
    else throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  return c;
}

void RelayConfig::validate() const {
  const bool local = upstream.host == "127.0.0.1" || upstream.host == "localhost" || upstream.host == listen.host ||
                     listen.host == "0.0.0.0";
  if (local && listen.port != 0 && listen.port == upstream.port)
    throw std::invalid_argument("listen port must differ from the upstream port");
  if (max_sessions == 0) throw std::invalid_argument("max_sessions must be positive");
  if (idle_timeout_s <= 0) throw std::invalid_argument("idle_timeout_s must be positive");
}

std::string to_json_line(const MediationDecision& d) {
  json j = {{"ts_us", d.ts_us},
            {"peer", d.src_ip.to_string()},
            {"verdict", d.verdict == Verdict::Forward ? "forward" : "drop"},
            {"score", d.lof_score},
            {"label", d.label ? json(to_string(*d.label)) : json(nullptr)},
            {"latency_us", d.latency_us}};
  if (!d.diagnostic.empty()) j["diagnostic"] = d.diagnostic;
  return j.dump();
}

Mediator::Mediator(std::shared_ptr<const DetectionModels> models, respond::AsyncResponder* responder)
    : models_(std::move(models)), responder_(responder) {
  if (!models_) throw std::invalid_argument("mediator needs models");
  sensor_.set_baselines(models_->pipeline.baselines);
}

MediationDecision Mediator::mediate(const telemetry::PacketMeta& packet, std::span<const std::uint8_t>) {
  return score(packet, monotonic_us(), false);
}

MediationDecision Mediator::mediate_message(Ipv4Address src_ip, std::uint16_t src_port, std::uint16_t dst_port,
                                            std::size_t message_bytes) {
  const std::int64_t started = monotonic_us();
  telemetry::PacketMeta p;
  p.src_ip = src_ip;
  p.src_mac = pseudo_mac(src_ip);
  p.src_port = src_port;
  p.dst_port = dst_port;
  p.payload_len_bytes = static_cast<std::uint32_t>(message_bytes);
  p.frame_len_bytes = static_cast<std::uint32_t>(message_bytes) + kHeaderEstimateBytes;
  p.timestamp_us = started;
  return score(p, started, true);
}

MediationDecision Mediator::score(const telemetry::PacketMeta& packet, std::int64_t started_us, bool stamp_now) {
  MediationDecision d;
  d.ts_us = packet.timestamp_us;
  d.peer = packet.src_mac;
  d.src_ip = packet.src_ip;
  try {
    telemetry::Observation obs;
    {
      // Stamp-and-ingest is atomic so concurrent sessions of one peer keep
      // its timestamps ordered.
      std::lock_guard lock(stamp_mutex_);
      telemetry::PacketMeta p = packet;
      if (stamp_now) p.timestamp_us = monotonic_us();
      d.ts_us = p.timestamp_us;
      obs = sensor_.ingest(p);
    }
    d.lof_score = models_->lof.score(models_->embed(obs.features));
    if (!models_->lof.is_anomalous(d.lof_score)) {
      d.verdict = Verdict::Forward;
    } else {
      d.verdict = Verdict::Drop;
      d.label = detect::classify(models_->forest, models_->classifier_row(obs.features)).label;
    }
  } catch (const std::exception& e) {
    d.verdict = Verdict::Drop;
    d.label.reset();
    d.diagnostic = e.what();
  }
  d.latency_us = std::max<std::int64_t>(0, monotonic_us() - started_us);
  if (d.label && responder_) responder_->submit(*d.label, d.src_ip, d.peer, d.ts_us);
  return d;
}

RelayServer::RelayServer(RelayConfig config, std::shared_ptr<const DetectionModels> models,
                         respond::IncidentResponder& responder)
    : config_(std::move(config)),
      models_(std::move(models)),
      responder_(responder),
      async_(responder),
      mediator_(models_, &async_) {
  config_.validate();
  if (config_.decision_log) {
    decision_log_.open(*config_.decision_log, std::ios::app);
    if (!decision_log_) throw std::runtime_error("cannot open decision log " + config_.decision_log->string());
  }
}

RelayServer::~RelayServer() { stop(); }

void RelayServer::start() {
  listener_.emplace(config_.listen.host, config_.listen.port);
  stopping_ = false;
  acceptor_ = std::thread([this] { accept_loop(); });
  spdlog::info("relay listening on {}:{} -> {}", config_.listen.host, listener_->port(),
               config_.upstream.to_string());
}

void RelayServer::stop() {
  if (stopping_.exchange(true)) return;
  if (acceptor_.joinable()) acceptor_.join();
  reap_sessions(true);
  if (listener_) listener_->close();
  async_.flush();
}

void RelayServer::set_decision_observer(std::function<void(const MediationDecision&)> observer) {
  std::lock_guard lock(stats_mutex_);
  observer_ = std::move(observer);
}

RelayStats RelayServer::stats() const {
  std::lock_guard lock(stats_mutex_);
  return stats_;
}

std::uint64_t RelayServer::forwarded_from(Ipv4Address ip) const {
  std::lock_guard lock(stats_mutex_);
  auto it = forwarded_by_ip_.find(ip);
  return it == forwarded_by_ip_.end() ? 0 : it->second;
}

std::optional<std::int64_t> RelayServer::first_message_us(Ipv4Address ip) const {
  std::lock_guard lock(stats_mutex_);
  auto it = first_message_.find(ip);
  if (it == first_message_.end()) return std::nullopt;
  return it->second;
}

void RelayServer::reap_sessions(bool all) {
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (all || it->done.load()) {
      if (it->thread.joinable()) it->thread.join();
      it = sessions_.erase(it);
      --active_sessions_;
    } else {
      ++it;
    }
  }
}

void RelayServer::accept_loop() {
  while (!stopping_) {
    reap_sessions(false);
    std::optional<net::Socket> client;
    try {
      client = listener_->accept(std::chrono::milliseconds(100));
    } catch (const std::exception& e) {
      spdlog::error("accept failed: {}", e.what());
      continue;
    }
    if (!client) continue;
    Ipv4Address ip;
    try {
      ip = client->peer().first;
    } catch (const std::exception&) {
      continue;
    }
    if (responder_.backend().is_blocked(ip) || active_sessions_ >= config_.max_sessions) {
      std::lock_guard lock(stats_mutex_);
      ++stats_.sessions_refused;
      continue;  // socket closes on scope exit
    }
    {
      std::lock_guard lock(stats_mutex_);
      ++stats_.sessions_accepted;
    }
    auto& session = sessions_.emplace_back();
    ++active_sessions_;
    session.thread = std::thread([this, &session, c = std::move(*client)]() mutable {
      run_session(std::move(c), session);
      session.done = true;
    });
  }
}

void RelayServer::record(const MediationDecision& d) {
  std::lock_guard lock(stats_mutex_);
  first_message_.try_emplace(d.src_ip, d.ts_us);
  if (d.verdict == Verdict::Forward) {
    ++stats_.forwarded;
    ++forwarded_by_ip_[d.src_ip];
  } else {
    ++stats_.dropped;
  }
  if (decision_log_.is_open()) decision_log_ << to_json_line(d) << '\n';
  if (observer_) observer_(d);
}

void RelayServer::run_session(net::Socket client, Session&) {
  const auto [ip, src_port] = client.peer();
  const std::uint16_t dst_port = listener_->port();
  net::Socket upstream;
  try {
    upstream = net::connect_tcp(config_.upstream);
  } catch (const std::exception& e) {
    respond::IncidentRecord rec;
    rec.ts_us = monotonic_us();
    rec.src_ip = ip;
    rec.src_mac = pseudo_mac(ip);
    rec.action_failed = true;
    rec.error = std::string("upstream unreachable: ") + e.what();
    responder_.log_event(rec);
    spdlog::error("session from {} refused: {}", ip.to_string(), e.what());
    return;
  }

  MbapFramer framer;
  std::vector<std::uint8_t> buf(64 * 1024);
  auto last_activity = std::chrono::steady_clock::now();
  const auto idle = std::chrono::seconds(config_.idle_timeout_s);
  bool client_open = true;
  while (!stopping_) {
    pollfd fds[2] = {{client_open ? client.fd() : -1, POLLIN, 0}, {upstream.fd(), POLLIN, 0}};
    const int r = ::poll(fds, 2, 100);
    if (r < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (r == 0) {
      if (std::chrono::steady_clock::now() - last_activity > idle) break;
      continue;
    }
    last_activity = std::chrono::steady_clock::now();
    try {
      if (client_open && (fds[0].revents & (POLLIN | POLLHUP | POLLERR))) {
        const auto n = client.read_some(buf);
        if (n == 0) {
          client_open = false;
          upstream.shutdown_write();
        } else {
          std::vector<Message> messages;
          try {
            messages = framer.feed(std::span(buf.data(), n));
          } catch (const MalformedStream& e) {
            spdlog::warn("dropping session from {}: {}", ip.to_string(), e.what());
            break;
          }
          bool blocked = false;
          for (const auto& m : messages) {
            if (responder_.backend().is_blocked(ip)) {
              blocked = true;
              break;
            }
            auto d = mediator_.mediate_message(ip, src_port, dst_port, m.bytes.size());
            // A block may land while this message was being scored.
            if (d.verdict == Verdict::Forward && responder_.backend().is_blocked(ip)) {
              d.verdict = Verdict::Drop;
              d.diagnostic = "source blocked";
            }
            if (d.verdict == Verdict::Forward) upstream.write_all(m.bytes);
            record(d);
          }
          if (blocked) break;
        }
      }
      if (fds[1].revents & (POLLIN | POLLHUP | POLLERR)) {
        const auto n = upstream.read_some(buf);
        if (n == 0) break;
        if (client_open) client.write_all(std::span(buf.data(), n));
      }
    } catch (const std::exception& e) {
      spdlog::debug("session from {} closed: {}", ip.to_string(), e.what());
      break;
    }
  }
}

namespace {
std::atomic<bool> g_signalled{false};
extern "C" void on_signal(int) { g_signalled = true; }
}  // namespace

int run_relay(const RelayConfig& config) {
  config.validate();
  auto models = std::make_shared<const DetectionModels>(load_models(config.models_path));
  auto policy = config.policy_path ? respond::ResponsePolicy::from_json(read_text_file(*config.policy_path))
                                   : respond::ResponsePolicy::defaults();
  std::unique_ptr<respond::BlockBackend> backend;
  if (config.block_cmd) backend = std::make_unique<respond::CommandBackend>(*config.block_cmd);
  else backend = std::make_unique<respond::MemoryBlocklist>();
  respond::IncidentResponder responder(policy, *backend, config.incident_log);
  RelayServer server(config, models, responder);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.start();
  while (!g_signalled) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  spdlog::info("shutting down");
  server.stop();
  const auto s = server.stats();
  spdlog::info("sessions accepted={} refused={} forwarded={} dropped={}", s.sessions_accepted, s.sessions_refused,
               s.forwarded, s.dropped);
  return 0;
}

}  // namespace plcguard::relay
