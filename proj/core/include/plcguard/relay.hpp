#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>

#include "plcguard/models.hpp"
#include "plcguard/net.hpp"
#include "plcguard/respond.hpp"
#include "plcguard/telemetry.hpp"

namespace plcguard::relay {

/// Synthetic Ethernet + IPv4 + TCP header bytes added to each message so
/// the frame-length features keep their wire meaning.
inline constexpr std::uint32_t kHeaderEstimateBytes = 54;

struct RelayConfig {
  net::Endpoint listen{"0.0.0.0", 502};
  net::Endpoint upstream{"127.0.0.1", 4321};
  std::filesystem::path models_path;
  std::optional<std::filesystem::path> policy_path;
  std::optional<std::filesystem::path> decision_log;
  std::optional<std::filesystem::path> incident_log;
  std::optional<std::string> block_cmd;
  std::size_t max_sessions = 1024;
  int idle_timeout_s = 300;

  /// Flat "key = value" document; '#' starts a comment. Keys: listen,
  /// upstream, models, policy, log, incident_log, block_cmd, max_sessions,
  /// idle_timeout_s.
  static RelayConfig parse(const std::string& text);
  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
};

enum class Verdict : std::uint8_t { Forward, Drop };

struct MediationDecision {
  std::int64_t ts_us = 0;
  MacAddress peer;
  Ipv4Address src_ip;
  Verdict verdict = Verdict::Drop;
  double lof_score = 0.0;
  std::optional<Label> label;
  std::int64_t latency_us = 0;
  /// Set when the message was dropped because it could not be scored.
  std::string diagnostic;
};

std::string to_json_line(const MediationDecision& d);

/// Scores client messages: telemetry -> pipeline I -> LOF, and for
/// anomalies pipeline II -> forest. Incidents go to the async responder.
class Mediator {
 public:
  Mediator(std::shared_ptr<const DetectionModels> models, respond::AsyncResponder* responder = nullptr);

  /// Header-only: the payload is not inspected.
  MediationDecision mediate(const telemetry::PacketMeta& packet, std::span<const std::uint8_t> payload = {});

  /// Stamps the message with the current monotonic time and mediates it.
  MediationDecision mediate_message(Ipv4Address src_ip, std::uint16_t src_port, std::uint16_t dst_port,
                                    std::size_t message_bytes);

  const DetectionModels& models() const { return *models_; }
  telemetry::TelemetrySensor& sensor() { return sensor_; }

 private:
  MediationDecision score(const telemetry::PacketMeta& packet, std::int64_t started_us, bool stamp_now);

  std::shared_ptr<const DetectionModels> models_;
  respond::AsyncResponder* responder_;
  telemetry::TelemetrySensor sensor_;
  std::mutex stamp_mutex_;
};

struct RelayStats {
  std::uint64_t sessions_accepted = 0;
  std::uint64_t sessions_refused = 0;
  std::uint64_t forwarded = 0;
  std::uint64_t dropped = 0;
};

/// TCP mediation proxy. One thread per client session.
class RelayServer {
 public:
  RelayServer(RelayConfig config, std::shared_ptr<const DetectionModels> models,
              respond::IncidentResponder& responder);
  ~RelayServer();
  RelayServer(const RelayServer&) = delete;
  RelayServer& operator=(const RelayServer&) = delete;

  /// Binds the listener and starts accepting.
  void start();
  void stop();
  std::uint16_t port() const { return listener_ ? listener_->port() : 0; }

  /// Called for every decision, from session threads.
  void set_decision_observer(std::function<void(const MediationDecision&)> observer);

  RelayStats stats() const;
  std::uint64_t forwarded_from(Ipv4Address ip) const;
  /// Time the first client message from ip was received.
  std::optional<std::int64_t> first_message_us(Ipv4Address ip) const;
  respond::AsyncResponder& async_responder() { return async_; }
  Mediator& mediator() { return mediator_; }

 private:
  struct Session {
    std::thread thread;
    std::atomic<bool> done{false};
  };
  void accept_loop();
  void run_session(net::Socket client, Session& self);
  void reap_sessions(bool all);
  void record(const MediationDecision& d);

  RelayConfig config_;
  std::shared_ptr<const DetectionModels> models_;
  respond::IncidentResponder& responder_;
  respond::AsyncResponder async_;
  Mediator mediator_;
  std::optional<net::Listener> listener_;
  std::thread acceptor_;
  std::atomic<bool> stopping_{false};
  std::list<Session> sessions_;
  std::size_t active_sessions_ = 0;

  mutable std::mutex stats_mutex_;
  RelayStats stats_;
  std::map<Ipv4Address, std::uint64_t> forwarded_by_ip_;
  std::map<Ipv4Address, std::int64_t> first_message_;
  std::function<void(const MediationDecision&)> observer_;
  std::ofstream decision_log_;
};

/// Loads models and policy from the config, starts the relay and blocks
/// until SIGINT/SIGTERM.
int run_relay(const RelayConfig& config);

}  // namespace plcguard::relay
