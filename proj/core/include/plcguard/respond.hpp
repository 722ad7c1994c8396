#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "plcguard/types.hpp"

namespace plcguard::respond {

enum class ActionKind : std::uint8_t { BlockSource, LogOnly };

std::string_view to_string(ActionKind a);

struct ResponsePolicy {
  std::map<Label, std::vector<ActionKind>> rules;
  std::vector<ActionKind> default_action{ActionKind::LogOnly};

  /// Block EX-1, EX-2, EX-3, EX-6, EX-7; log EX-4.
  static ResponsePolicy defaults();
  /// {"EX-7": ["block"], "EX-4": ["log"], "default": ["log"]}. Labels not
  /// mentioned keep the default policy's rule.
  static ResponsePolicy from_json(const std::string& text);
  std::string to_json() const;

  const std::vector<ActionKind>& resolve(Label l) const;
};

class BlockBackend {
 public:
  virtual ~BlockBackend() = default;
  /// Throws on failure.
  virtual void block(Ipv4Address ip) = 0;
  virtual bool is_blocked(Ipv4Address ip) const = 0;
  virtual std::size_t size() const = 0;
};

/// Concurrent readers, serialised writers.
class MemoryBlocklist : public BlockBackend {
 public:
  void block(Ipv4Address ip) override;
  bool is_blocked(Ipv4Address ip) const override;
  std::size_t size() const override;

 private:
  mutable std::shared_mutex mutex_;
  std::set<Ipv4Address> blocked_;
};

/// Runs a shell command per block ("{ip}" is substituted) and mirrors the
/// set in memory so the relay can enforce it at the socket layer too.
class CommandBackend : public BlockBackend {
 public:
  explicit CommandBackend(std::string command_template = "iptables -A INPUT -s {ip} -j DROP");
  void block(Ipv4Address ip) override;
  bool is_blocked(Ipv4Address ip) const override { return mirror_.is_blocked(ip); }
  std::size_t size() const override { return mirror_.size(); }

  std::string render(Ipv4Address ip) const;

 private:
  std::string template_;
  MemoryBlocklist mirror_;
};

/// Installs a block and returns the installation timestamp (monotonic_us).
std::int64_t block_source(Ipv4Address ip, BlockBackend& backend);

struct IncidentRecord {
  std::int64_t ts_us = 0;
  /// Absent for operational incidents such as an unreachable upstream.
  std::optional<Label> label;
  Ipv4Address src_ip;
  MacAddress src_mac;
  std::vector<std::string> actions_taken;
  std::optional<std::int64_t> block_installed_ts_us;
  bool duplicate = false;
  bool action_failed = false;
  std::string error;
};

std::string to_json_line(const IncidentRecord& r);

/// Executes policy actions. Idempotent per (ip, label): a repeat is
/// recorded but runs no actions.
class IncidentResponder {
 public:
  IncidentResponder(ResponsePolicy policy, BlockBackend& backend,
                    std::optional<std::filesystem::path> incident_log = std::nullopt);

  IncidentRecord handle_incident(Label label, Ipv4Address src_ip, const MacAddress& src_mac,
                                 std::int64_t ts_us = monotonic_us());

  /// Logs an incident that did not come from the classifier (e.g. an
  /// unreachable upstream). No actions are run.
  void log_event(const IncidentRecord& record);

  std::vector<IncidentRecord> records() const;
  BlockBackend& backend() { return backend_; }
  const ResponsePolicy& policy() const { return policy_; }

 private:
  void append(const IncidentRecord& r);

  ResponsePolicy policy_;
  BlockBackend& backend_;
  mutable std::mutex mutex_;
  std::set<std::pair<Ipv4Address, Label>> handled_;
  std::vector<IncidentRecord> records_;
  std::ofstream log_;
};

/// Runs handle_incident on a background thread so callers never wait on
/// rule installation. Submissions are deduplicated per (ip, label).
class AsyncResponder {
 public:
  explicit AsyncResponder(IncidentResponder& responder);
  ~AsyncResponder();
  AsyncResponder(const AsyncResponder&) = delete;
  AsyncResponder& operator=(const AsyncResponder&) = delete;

  /// Returns false when (ip, label) was already submitted.
  bool submit(Label label, Ipv4Address ip, const MacAddress& mac, std::int64_t ts_us);
  /// Blocks until the queue is empty.
  void flush();
  void stop();

 private:
  struct Job {
    Label label;
    Ipv4Address ip;
    MacAddress mac;
    std::int64_t ts_us;
  };
  void run();

  IncidentResponder& responder_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::deque<Job> queue_;
  std::set<std::pair<Ipv4Address, Label>> submitted_;
  bool busy_ = false;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace plcguard::respond
